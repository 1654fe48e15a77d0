#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nteg/numeric.hpp"

namespace nteg {

using Vec = Eigen::VectorXd;

/// One player's fixed parameters. Both must be positive and finite.
struct PlayerParams {
    double cost;
    double valuation;

    double benefit_cost() const { return valuation / cost; }
};

/// A contribution game: players, an optional shared reward, and the relative
/// tolerance used by every numeric comparison in this library.
///
/// Construction validates: at least 2 players, positive finite parameters,
/// reward (when present) positive. A reward below min valuation is required
/// only by the two-player symmetric-bounds computation and is checked there.
///
/// Tied benefit-cost ratios are allowed: utilities, best responses, and the
/// grid checks are well defined regardless. Only the closed-form family
/// catalogue assumes pairwise distinct ratios, and the functions that build
/// it check has_distinct_betas() themselves.
class GameSpec {
  public:
    GameSpec(std::vector<PlayerParams> players, std::optional<double> reward = std::nullopt,
             double comparison_tolerance = 1e-9);

    int n() const { return static_cast<int>(players_.size()); }
    const std::vector<PlayerParams>& players() const { return players_; }
    const PlayerParams& player(int i) const { return players_.at(i); }
    const std::optional<double>& reward() const { return reward_; }
    double tolerance() const { return tolerance_; }

    /// Benefit-cost ratios in player order.
    const Vec& betas() const { return betas_; }
    Vec costs() const;
    Vec valuations() const;

    /// Player indices sorted by ascending benefit-cost ratio.
    const std::vector<int>& beta_order() const { return beta_order_; }

    /// True when no two ratios coincide within the comparison tolerance.
    /// The closed-form family catalogue is only defined in that case.
    bool has_distinct_betas() const { return distinct_betas_; }

    /// Spec with one player appended.
    GameSpec with_player(PlayerParams p) const;
    /// Spec with player i removed (must leave at least 2 players).
    GameSpec without_player(int i) const;

  private:
    std::vector<PlayerParams> players_;
    std::optional<double> reward_;
    double tolerance_;
    Vec betas_;
    std::vector<int> beta_order_;
    bool distinct_betas_ = true;
};

/// Nonnegative contribution vector, one entry per player.
class Profile {
  public:
    Profile() = default;
    explicit Profile(Vec x);
    Profile(std::initializer_list<double> xs) : Profile(Vec{Eigen::Map<const Vec>(xs.begin(), static_cast<Eigen::Index>(xs.size()))}) {}

    static Profile zero(int n) { return Profile(Vec::Zero(n)); }

    int size() const { return static_cast<int>(x_.size()); }
    double operator[](int i) const { return x_(i); }
    const Vec& contributions() const { return x_; }
    double total() const { return x_.sum(); }
    double max() const { return x_.size() ? x_.maxCoeff() : 0.0; }
    bool all_zero() const { return x_.size() == 0 || x_.maxCoeff() <= 0.0; }

    Profile with(int i, double value) const;
    Profile appended(double value) const;
    Profile erased(int i) const;

  private:
    Vec x_;
};

/// Normalised total effort sum(x)/max(x) in [1, n]; nullopt marks the
/// all-zero profile (the ratio is undefined there).
std::optional<double> nte(const Profile& x);

/// ln of the normalised total effort; 0 for the all-zero profile.
double reliability(const Profile& x);

/// Player i's share of the reward, proportional to contribution; 0 when the
/// spec has no reward or nobody contributes.
double reward_share(int i, const Profile& x, const GameSpec& spec);

/// Player i's payoff: valuation * reliability - cost * contribution, plus the
/// reward share when a reward is configured.
double utility(int i, const Profile& x, const GameSpec& spec);

/// reliability * sum(valuations) - sum(cost_i * x_i). The reward is excluded:
/// it is a transfer, not created value.
double social_payoff(const Profile& x, const GameSpec& spec);

/// Everyone contributes min_effort except players forced to free-ride by the
/// best-response rule (contribute 0 when the others' assigned sum reaches the
/// benefit-cost ratio), processed in ascending-ratio order.
Profile social_optimum(const GameSpec& spec, double min_effort);

}  // namespace nteg
