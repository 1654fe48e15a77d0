#include "nteg/equilibrium.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nteg {

namespace {

double others_sum(const Profile& x, int i) { return x.total() - x[i]; }

double others_max(const Profile& x, int i) {
    double m = 0.0;
    for (int j = 0; j < x.size(); ++j)
        if (j != i) m = std::max(m, x[j]);
    return m;
}

void reject_reward(const GameSpec& spec, const char* what) {
    if (spec.reward())
        throw std::invalid_argument(std::string(what) + " applies to reward-free games only");
}

void require_distinct(const GameSpec& spec, const char* what) {
    if (!spec.has_distinct_betas())
        throw std::invalid_argument(std::string(what) +
                                    " assumes pairwise distinct benefit-cost ratios");
}

}  // namespace

double best_response(int i, const Profile& x, const GameSpec& spec) {
    reject_reward(spec, "best_response");
    if (i < 0 || i >= spec.n() || x.size() != spec.n())
        throw std::invalid_argument("player index / profile size mismatch");
    double cap = others_max(x, i);
    double fill = spec.betas()(i) - others_sum(x, i);
    return std::max(0.0, std::min(cap, fill));
}

EquilibriumReport classify(const Profile& x, const GameSpec& spec,
                           std::optional<double> tolerance_override) {
    reject_reward(spec, "classify");
    if (x.size() != spec.n()) throw std::invalid_argument("profile size mismatch");
    const double tol = tolerance_override.value_or(spec.tolerance());
    const int n = spec.n();

    EquilibriumReport rep;
    rep.witness.reserve(static_cast<size_t>(n));
    bool fixed_point = true;
    for (int i = 0; i < n; ++i) {
        double br = best_response(i, x, spec);
        rep.witness.push_back(PlayerWitness{br, x[i] - br});
        if (!close(x[i], br, tol)) fixed_point = false;
    }
    if (!fixed_point) {
        rep.details = "some player is off its best response";
        return rep;
    }
    rep.is_equilibrium = true;

    // The family catalogue assumes pairwise distinct ratios; with ties the
    // fixed-point verdict above still stands but no family label applies.
    if (!spec.has_distinct_betas()) {
        rep.unmatched_equilibrium = true;
        rep.details = "tied benefit-cost ratios: family catalogue not applicable";
        return rep;
    }

    // Degenerate equilibrium: nobody contributes, nobody free-rides on anyone.
    bool all_zero = true;
    for (int i = 0; i < n; ++i)
        if (!close(x[i], 0.0, tol)) all_zero = false;
    if (all_zero) {
        rep.family = Family::OneValue;
        rep.eq_value = 0.0;
        rep.details = "all-zero (degenerate shared-value equilibrium)";
        return rep;
    }

    const auto& order = spec.beta_order();
    std::vector<int> contributors;
    for (int i = 0; i < n; ++i) {
        if (close(x[i], 0.0, tol))
            rep.free_riders.push_back(i);
        else
            contributors.push_back(i);
    }
    std::sort(rep.free_riders.begin(), rep.free_riders.end());

    // Free riders must be exactly the lowest-ratio prefix of the sorted order.
    const int fr = static_cast<int>(rep.free_riders.size());
    for (int k = 0; k < fr; ++k) {
        int p = order[static_cast<size_t>(k)];
        if (!close(x[p], 0.0, tol)) {
            rep.unmatched_equilibrium = true;
            rep.details = "free riders are not the lowest-ratio prefix";
            return rep;
        }
    }

    const Vec& betas = spec.betas();
    double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
    for (int i : contributors) {
        cmax = std::max(cmax, x[i]);
        cmin = std::min(cmin, x[i]);
    }
    const int m = n - fr;  // contributor count

    if (close(cmin, cmax, tol)) {
        // Shared-value family: bounds are closed at the spec tolerance.
        double x_eq = cmax;
        double lo = fr == 0 ? 0.0 : betas(order[static_cast<size_t>(fr - 1)]) / m;
        double hi = betas(order[static_cast<size_t>(fr)]) / m;
        if (m >= 2 && leq(lo, x_eq, tol) && leq(x_eq, hi, tol)) {
            rep.family = Family::OneValue;
            rep.eq_value = x_eq;
            std::ostringstream os;
            os << m << " contributors share one value, " << fr << " free-riding";
            rep.details = os.str();
        } else {
            rep.unmatched_equilibrium = true;
            rep.details = "shared value violates the family bounds";
        }
        return rep;
    }

    // Two-value family: exactly one contributor strictly below the major value.
    std::vector<int> minors;
    for (int i : contributors)
        if (lt(x[i], cmax, tol)) minors.push_back(i);
    bool majors_aligned = true;
    for (int i : contributors)
        if (!lt(x[i], cmax, tol) && !close(x[i], cmax, tol)) majors_aligned = false;
    if (minors.size() != 1 || !majors_aligned) {
        rep.unmatched_equilibrium = true;
        rep.details = "contributions form neither one nor two aligned values";
        return rep;
    }
    int minor = minors[0];
    // The minor must be the lowest-ratio contributor.
    if (minor != order[static_cast<size_t>(fr)]) {
        rep.unmatched_equilibrium = true;
        rep.details = "minor contributor is not the lowest-ratio contributor";
        return rep;
    }
    const int q = m - 1;  // majors
    double x_M = cmax;
    double x_m = x[minor];
    double beta_minor = betas(minor);
    bool balance = close(x_m, beta_minor - q * x_M, tol);
    bool bounds = q >= 2 && lt(beta_minor / (q + 1), x_M, tol) && lt(x_M, beta_minor / q, tol);
    if (balance && bounds) {
        rep.family = Family::TwoValue;
        rep.eq_value = x_M;
        rep.minor_value = x_m;
        rep.minor_player = minor;
        std::ostringstream os;
        os << q << " majors, minor player " << (minor + 1) << " at " << x_m << ", " << fr
           << " free-riding";
        rep.details = os.str();
    } else {
        rep.unmatched_equilibrium = true;
        rep.details = balance ? "major value violates the strict family bounds"
                              : "minor value does not balance the majors";
    }
    return rep;
}

Interval two_player_equilibrium_range(const GameSpec& spec) {
    reject_reward(spec, "two_player_equilibrium_range");
    if (spec.n() != 2) throw std::invalid_argument("defined for exactly 2 players");
    return Interval{0.0, spec.betas().minCoeff() / 2.0};
}

bool interior_pair_violation(const Profile& x, const GameSpec& spec) {
    reject_reward(spec, "interior_pair_violation");
    require_distinct(spec, "interior_pair_violation");
    const double tol = spec.tolerance();
    double top = x.max();
    int below_max_responders = 0;
    for (int i = 0; i < spec.n(); ++i) {
        if (close(x[i], 0.0, tol)) continue;           // must contribute
        if (!lt(x[i], top, tol)) continue;             // strictly below the max
        double br = best_response(i, x, spec);
        if (!close(x[i], br, tol)) continue;           // must be a best response
        ++below_max_responders;                        // ratios are pairwise distinct by spec
    }
    return below_max_responders >= 2;
}

std::vector<OneValueRange> one_value_ranges(const GameSpec& spec) {
    reject_reward(spec, "one_value_ranges");
    require_distinct(spec, "one_value_ranges");
    const auto& order = spec.beta_order();
    const Vec& betas = spec.betas();
    const int n = spec.n();
    std::vector<OneValueRange> rows;
    for (int fr = 0; fr < n; ++fr) {
        int m = n - fr;
        double lo = fr == 0 ? 0.0 : betas(order[static_cast<size_t>(fr - 1)]) / m;
        double hi = betas(order[static_cast<size_t>(fr)]) / m;
        rows.push_back(OneValueRange{fr, Interval{lo, hi}, m >= 2});
    }
    return rows;
}

std::vector<TwoValueRange> two_value_ranges(const GameSpec& spec) {
    reject_reward(spec, "two_value_ranges");
    require_distinct(spec, "two_value_ranges");
    const auto& order = spec.beta_order();
    const Vec& betas = spec.betas();
    const int n = spec.n();
    std::vector<TwoValueRange> rows;
    for (int r = 0; r + 3 <= n; ++r) {  // at least two majors above the minor
        int q = n - r - 1;
        double b = betas(order[static_cast<size_t>(r)]);
        rows.push_back(TwoValueRange{r, Interval{b / (q + 1), b / q}});
    }
    return rows;
}

RewardEquilibriumBounds reward_two_player_bounds(const GameSpec& spec) {
    if (spec.n() != 2) throw std::invalid_argument("defined for exactly 2 players");
    if (!spec.reward()) throw std::invalid_argument("spec has no reward");
    const double R = *spec.reward();
    double vmin = std::min(spec.player(0).valuation, spec.player(1).valuation);
    if (!(R < vmin))
        throw std::invalid_argument("reward must be below the smaller valuation");

    RewardEquilibriumBounds out;
    for (int k = 0; k < 2; ++k) {
        double c = spec.player(k).cost;
        double v = spec.player(k).valuation;
        double beta = v / c;
        double disc = 1.0 + 4.0 * (c / R) * (v * v / (R * c) + v / c);
        double sq = std::sqrt(disc);
        auto bound = [&](double sign) {
            double root = R * (1.0 + sign * sq) / (2.0 * c);
            return (c / (4.0 * R)) * (root * root - beta * beta);
        };
        out.per_player[static_cast<size_t>(k)] =
            Interval{std::max(0.0, bound(-1.0)), bound(+1.0)};
    }
    return out;
}

}  // namespace nteg
