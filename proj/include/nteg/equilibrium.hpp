#pragma once

#include <array>
#include <string>
#include <vector>

#include "nteg/model.hpp"
#include "nteg/numeric.hpp"

namespace nteg {

/// Myopic best response of player i against the others' contributions:
/// max(0, min(max of others, ratio_i - sum of others)). Free-rides (0) once
/// the others already cover the benefit-cost ratio. Rejects reward-bearing
/// specs: with a reward the closed form does not apply.
double best_response(int i, const Profile& x, const GameSpec& spec);

enum class Family {
    OneValue,  ///< every contributor plays one shared value; lowest ratios free-ride
    TwoValue,  ///< one minor contributor below the majors' shared value
    None,      ///< not an equilibrium, or (flagged) an equilibrium matching no family
};

struct PlayerWitness {
    double best_response;  ///< target against the profile
    double delta;          ///< contribution - best_response
};

/// Outcome of classifying a profile against the equilibrium families.
struct EquilibriumReport {
    bool is_equilibrium = false;
    Family family = Family::None;
    std::vector<int> free_riders;        ///< 0-based, ascending
    std::optional<double> eq_value;      ///< shared value (one-value) or major value (two-value)
    std::optional<double> minor_value;   ///< two-value only
    std::optional<int> minor_player;     ///< two-value only, 0-based
    bool unmatched_equilibrium = false;  ///< equilibrium fitting neither family (never expected)
    std::vector<PlayerWitness> witness;  ///< per-player best responses and deltas
    std::string details;

    int contributor_count(int n) const { return n - static_cast<int>(free_riders.size()); }
};

/// Checks the best-response fixed point, then matches the profile against the
/// one-value / two-value families (free riders must be the lowest-ratio
/// prefix; the shared-value bounds use closed comparisons, the two-value
/// bounds strict ones, all at the spec tolerance). The all-zero profile
/// reports as a degenerate one-value equilibrium at 0. `tolerance_override`
/// substitutes the spec tolerance (used by dynamics, whose convergence
/// resolution is coarser). Rejects reward-bearing specs.
EquilibriumReport classify(const Profile& x, const GameSpec& spec,
                           std::optional<double> tolerance_override = std::nullopt);

/// Two-player games: symmetric profiles (x, x) with x in [0, min(ratio)/2]
/// are exactly the equilibria.
Interval two_player_equilibrium_range(const GameSpec& spec);

/// True iff two players with distinct ratios both contribute strictly
/// positive amounts strictly below the profile max while each plays its best
/// response. Expected false everywhere (the shared-value structure forbids
/// it); exposed as a testable predicate.
bool interior_pair_violation(const Profile& x, const GameSpec& spec);

/// One enumerated one-value family row: with `free_riders` lowest-ratio
/// players out, contributors share a value in [lo, hi]. Split points whose
/// contributor count is below 2 admit no equilibrium (a lone contributor's
/// best response is 0) and are flagged infeasible.
struct OneValueRange {
    int free_riders;
    Interval range;
    bool feasible;
};

/// One enumerated two-value family row: the minor player is the
/// `minor_rank`-th lowest ratio (0-based among sorted players); the majors'
/// shared value lies strictly inside (lo, hi) and the minor plays
/// ratio_minor - (majors count) * major_value.
struct TwoValueRange {
    int minor_rank;
    Interval major_range;  ///< open interval for the major value
};

std::vector<OneValueRange> one_value_ranges(const GameSpec& spec);
std::vector<TwoValueRange> two_value_ranges(const GameSpec& spec);

/// Per-player bounds for symmetric equilibria of the two-player reward game.
struct RewardEquilibriumBounds {
    std::array<Interval, 2> per_player;  ///< (lower, upper) for each player, lower clamped at 0

    /// Intersection: x must sit strictly inside both players' intervals.
    Interval symmetric() const {
        return Interval{std::max(per_player[0].lo, per_player[1].lo),
                        std::min(per_player[0].hi, per_player[1].hi)};
    }
};

/// Symmetric-equilibrium interval of the two-player game with a shared reward
/// R < min valuation, from the discriminant
///   D_k = 1 + 4 (c_k/R) (v_k^2/(R c_k) + v_k/c_k)
/// per player: bounds (c/(4R)) ((R(1 -/+ sqrt(D))/(2c))^2 - ratio^2), lower
/// clamped at 0. Algebraically sqrt(D) = 1 + 2v/R, so the raw lower bound is
/// exactly 0 and the upper equals ratio/2 + R/(4c).
RewardEquilibriumBounds reward_two_player_bounds(const GameSpec& spec);

}  // namespace nteg
