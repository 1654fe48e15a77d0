#include "nteg/dynamics.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

#include "nteg/oracle.hpp"

namespace nteg {

namespace {

constexpr int kCycleWindow = 200;
constexpr double kCycleResolution = 1e9;  // profiles compared at 9 decimals

std::vector<std::int64_t> rounded_key(const Profile& x) {
    std::vector<std::int64_t> key(static_cast<size_t>(x.size()));
    for (int i = 0; i < x.size(); ++i)
        key[static_cast<size_t>(i)] = std::llround(x[i] * kCycleResolution);
    return key;
}

Vec utilities_of(const Profile& x, const GameSpec& spec) {
    Vec u(spec.n());
    for (int i = 0; i < spec.n(); ++i) u(i) = utility(i, x, spec);
    return u;
}

void record(Trace& t, const Profile& x, const GameSpec& spec) {
    t.steps.push_back(x);
    t.reliabilities.push_back(reliability(x));
    t.utilities.push_back(utilities_of(x, spec));
}

// Best-response targets for one step; the grid stands in for the closed form
// when a reward is present.
Vec targets_of(const Profile& x, const GameSpec& spec, const std::set<int>& frozen) {
    Vec t(spec.n());
    std::optional<GridConfig> grid;
    if (spec.reward()) grid = GridConfig::for_spec(spec);
    for (int i = 0; i < spec.n(); ++i) {
        if (frozen.count(i)) {
            t(i) = x[i];
        } else if (grid) {
            t(i) = grid_best_response(i, x, spec, *grid);
        } else {
            t(i) = best_response(i, x, spec);
        }
    }
    return t;
}

}  // namespace

void DynamicsConfig::validate() const {
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
    if (convergence_window < 1) throw std::invalid_argument("convergence_window must be >= 1");
    if (delta_up && !(*delta_up >= 0.0)) throw std::invalid_argument("delta_up must be >= 0");
    if (delta_down && !(*delta_down >= 0.0 && *delta_down <= 1.0))
        throw std::invalid_argument("delta_down must be in [0, 1]");
    if (total_effort_cap && !(*total_effort_cap > 0.0))
        throw std::invalid_argument("total_effort_cap must be positive");
    if (!(zero_escape > 0.0)) throw std::invalid_argument("zero_escape must be positive");
}

Profile step(const Profile& x, const GameSpec& spec, const DynamicsConfig& cfg,
             const std::set<int>& frozen) {
    cfg.validate();
    if (x.size() != spec.n()) throw std::invalid_argument("profile size mismatch");
    Vec next = targets_of(x, spec, frozen);

    for (int i = 0; i < spec.n(); ++i) {
        if (frozen.count(i)) continue;
        if (cfg.delta_up) {
            double ceil = x[i] > 0.0 ? x[i] * (1.0 + *cfg.delta_up) : cfg.zero_escape;
            next(i) = std::min(next(i), ceil);
        }
        if (cfg.delta_down) next(i) = std::max(next(i), x[i] * (1.0 - *cfg.delta_down));
    }

    if (cfg.total_effort_cap) {
        double up = 0.0;
        for (int i = 0; i < spec.n(); ++i) up += std::max(0.0, next(i) - x[i]);
        if (up > *cfg.total_effort_cap) {
            double scale = *cfg.total_effort_cap / up;  // downward moves stay untouched
            for (int i = 0; i < spec.n(); ++i)
                if (next(i) > x[i]) next(i) = x[i] + (next(i) - x[i]) * scale;
        }
    }
    return Profile(std::move(next));
}

Trace run(const Profile& initial, const GameSpec& spec, const DynamicsConfig& cfg,
          const std::set<int>& frozen) {
    cfg.validate();
    Trace trace;
    record(trace, initial, spec);

    std::deque<std::pair<std::vector<std::int64_t>, int>> window;
    window.emplace_back(rounded_key(initial), 0);

    Profile x = initial;
    int quiet = 0;
    trace.outcome = Outcome::MaxStepsReached;
    for (int s = 1; s <= cfg.max_steps; ++s) {
        Profile y = step(x, spec, cfg, frozen);
        record(trace, y, spec);

        double change = (y.contributions() - x.contributions()).cwiseAbs().maxCoeff();
        quiet = change <= cfg.convergence_tol ? quiet + 1 : 0;
        if (quiet >= cfg.convergence_window) {
            trace.outcome = Outcome::Converged;
            break;
        }

        auto key = rounded_key(y);
        for (auto it = window.rbegin(); it != window.rend(); ++it) {
            int period = s - it->second;
            if (period < 2 || it->first != key) continue;
            // A repeat only marks a cycle if the profile moved in between;
            // a run of identical keys is the convergence path.
            bool moved = false;
            for (auto jt = window.rbegin(); jt != it; ++jt)
                if (jt->first != key) { moved = true; break; }
            if (!moved) continue;
            trace.outcome = Outcome::CycleDetected;
            trace.cycle_period = period;
            break;
        }
        if (trace.outcome == Outcome::CycleDetected) break;
        window.emplace_back(std::move(key), s);
        if (window.size() > kCycleWindow) window.pop_front();
        x = y;
    }

    const Profile& last = trace.steps.back();
    if (spec.reward()) {
        // No closed-form families with a reward: certify against the grid.
        EquilibriumReport rep;
        GridConfig grid = GridConfig::for_spec(spec);
        rep.is_equilibrium = verify_equilibrium(last, spec, grid);
        for (int i = 0; i < spec.n(); ++i) {
            double br = grid_best_response(i, last, spec, grid);
            rep.witness.push_back(PlayerWitness{br, last[i] - br});
        }
        rep.details = "grid-verified (reward game; families not applicable)";
        trace.final_report = rep;
    } else {
        double tol = std::max(spec.tolerance(), 10.0 * cfg.convergence_tol);
        // A multiplicative down-limit can never finish a decay to zero: the
        // per-step move drops under the convergence tolerance once a value
        // reaches convergence_tol / delta_down, so contributions below that
        // plateau are indistinguishable from their limit.
        if (cfg.delta_down && *cfg.delta_down > 0.0)
            tol = std::max(tol, cfg.convergence_tol / *cfg.delta_down);
        trace.final_report = classify(last, spec, tol);
    }
    return trace;
}

int Trace::settle_index(double tol) const {
    const Vec& last = steps.back().contributions();
    int k = static_cast<int>(steps.size()) - 1;
    while (k > 0 &&
           (steps[static_cast<size_t>(k - 1)].contributions() - last).cwiseAbs().maxCoeff() <= tol)
        --k;
    return k;
}

RandomInstance random_instance(int n, std::pair<double, double> beta_range,
                               std::pair<double, double> x_range, std::uint64_t seed,
                               std::pair<double, double> cost_range,
                               std::optional<double> reward, double comparison_tolerance) {
    if (n < 2) throw std::invalid_argument("need at least 2 players");
    auto check_range = [](std::pair<double, double> r, const char* what) {
        if (!(r.first > 0.0 && r.second >= r.first))
            throw std::invalid_argument(std::string(what) + " range must be positive and ordered");
    };
    check_range(beta_range, "ratio");
    check_range(cost_range, "cost");
    if (!(x_range.first >= 0.0 && x_range.second >= x_range.first && x_range.second > 0.0))
        throw std::invalid_argument("contribution range must be nonnegative and ordered");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> beta_d(beta_range.first, beta_range.second);
    std::uniform_real_distribution<double> cost_d(cost_range.first, cost_range.second);
    std::uniform_real_distribution<double> x_d(x_range.first, x_range.second);

    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<PlayerParams> players;
        players.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            double c = cost_d(rng);
            double b = beta_d(rng);
            players.push_back(PlayerParams{c, b * c});
        }
        std::vector<double> betas;
        for (const auto& p : players) betas.push_back(p.benefit_cost());
        std::sort(betas.begin(), betas.end());
        bool distinct = true;
        for (size_t k = 1; k < betas.size(); ++k)
            if (close(betas[k - 1], betas[k], comparison_tolerance)) distinct = false;
        if (!distinct) continue;  // ratio collision: redraw the whole spec

        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = x_d(rng);
        return RandomInstance{GameSpec(std::move(players), reward, comparison_tolerance),
                              Profile(std::move(x))};
    }
    throw std::runtime_error("could not draw distinct benefit-cost ratios");
}

}  // namespace nteg
