#include "nteg/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nteg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

GameSpec::GameSpec(std::vector<PlayerParams> players, std::optional<double> reward,
                   double comparison_tolerance)
    : players_(std::move(players)), reward_(reward), tolerance_(comparison_tolerance) {
    require(players_.size() >= 2, "game needs at least 2 players");
    require(std::isfinite(tolerance_) && tolerance_ > 0.0, "comparison tolerance must be positive");
    for (const auto& p : players_) {
        require(std::isfinite(p.cost) && p.cost > 0.0, "player cost must be positive and finite");
        require(std::isfinite(p.valuation) && p.valuation > 0.0,
                "player valuation must be positive and finite");
    }
    if (reward_) require(std::isfinite(*reward_) && *reward_ > 0.0, "reward must be positive");

    betas_.resize(static_cast<Eigen::Index>(players_.size()));
    for (int i = 0; i < n(); ++i) betas_(i) = players_[static_cast<size_t>(i)].benefit_cost();

    beta_order_.resize(players_.size());
    std::iota(beta_order_.begin(), beta_order_.end(), 0);
    std::sort(beta_order_.begin(), beta_order_.end(),
              [&](int a, int b) { return betas_(a) < betas_(b); });
    for (size_t k = 1; k < beta_order_.size(); ++k) {
        double lo = betas_(beta_order_[k - 1]);
        double hi = betas_(beta_order_[k]);
        if (close(lo, hi, tolerance_)) distinct_betas_ = false;
    }
}

Vec GameSpec::costs() const {
    Vec c(n());
    for (int i = 0; i < n(); ++i) c(i) = players_[static_cast<size_t>(i)].cost;
    return c;
}

Vec GameSpec::valuations() const {
    Vec v(n());
    for (int i = 0; i < n(); ++i) v(i) = players_[static_cast<size_t>(i)].valuation;
    return v;
}

GameSpec GameSpec::with_player(PlayerParams p) const {
    auto ps = players_;
    ps.push_back(p);
    return GameSpec(std::move(ps), reward_, tolerance_);
}

GameSpec GameSpec::without_player(int i) const {
    require(i >= 0 && i < n(), "player index out of range");
    auto ps = players_;
    ps.erase(ps.begin() + i);
    return GameSpec(std::move(ps), reward_, tolerance_);
}

Profile::Profile(Vec x) : x_(std::move(x)) {
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
        if (!(std::isfinite(x_(i)) && x_(i) >= 0.0))
            throw std::invalid_argument("contributions must be nonnegative and finite");
    }
}

Profile Profile::with(int i, double value) const {
    Vec y = x_;
    y(i) = value;
    return Profile(std::move(y));
}

Profile Profile::appended(double value) const {
    Vec y(x_.size() + 1);
    y << x_, value;
    return Profile(std::move(y));
}

Profile Profile::erased(int i) const {
    Vec y(x_.size() - 1);
    y << x_.head(i), x_.tail(x_.size() - 1 - i);
    return Profile(std::move(y));
}

std::optional<double> nte(const Profile& x) {
    if (x.all_zero()) return std::nullopt;
    return x.total() / x.max();
}

double reliability(const Profile& x) {
    auto f = nte(x);
    return f ? std::log(*f) : 0.0;
}

double reward_share(int i, const Profile& x, const GameSpec& spec) {
    if (!spec.reward() || x.all_zero()) return 0.0;
    return *spec.reward() * x[i] / x.total();
}

double utility(int i, const Profile& x, const GameSpec& spec) {
    const auto& p = spec.player(i);
    return p.valuation * reliability(x) - p.cost * x[i] + reward_share(i, x, spec);
}

double social_payoff(const Profile& x, const GameSpec& spec) {
    return reliability(x) * spec.valuations().sum() - spec.costs().dot(x.contributions());
}

Profile social_optimum(const GameSpec& spec, double min_effort) {
    if (!(std::isfinite(min_effort) && min_effort > 0.0))
        throw std::invalid_argument("min_effort must be positive");
    Vec x = Vec::Constant(spec.n(), min_effort);
    for (int i : spec.beta_order()) {
        double others = x.sum() - x(i);
        if (others >= spec.betas()(i)) x(i) = 0.0;
    }
    return Profile(std::move(x));
}

}  // namespace nteg
