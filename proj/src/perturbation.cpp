#include "nteg/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nteg/oracle.hpp"

namespace nteg {

namespace {

// Tracks how close the decisive comparisons came to flipping the verdict.
struct Margin {
    double value = std::numeric_limits<double>::infinity();
    void note(double a, double b) { value = std::min(value, std::fabs(a - b) / cmp_scale(a, b)); }
};

void require_classified(const EquilibriumReport& rep) {
    if (!rep.is_equilibrium || rep.unmatched_equilibrium || rep.family == Family::None)
        throw std::invalid_argument("prediction requires a classified equilibrium");
}

void reject_reward(const GameSpec& spec) {
    if (spec.reward())
        throw std::invalid_argument("disruption rules apply to reward-free games only");
}

std::vector<int> contributors_of(const GameSpec& spec, const EquilibriumReport& rep) {
    std::vector<bool> is_fr(static_cast<size_t>(spec.n()), false);
    for (int f : rep.free_riders) is_fr[static_cast<size_t>(f)] = true;
    std::vector<int> out;
    for (int i = 0; i < spec.n(); ++i)
        if (!is_fr[static_cast<size_t>(i)]) out.push_back(i);
    return out;
}

bool is_free_rider(const EquilibriumReport& rep, int i) {
    return std::find(rep.free_riders.begin(), rep.free_riders.end(), i) != rep.free_riders.end();
}

double min_beta(const GameSpec& spec, const std::vector<int>& ids) {
    double b = std::numeric_limits<double>::infinity();
    for (int i : ids) b = std::min(b, spec.betas()(i));
    return b;
}

// Best response regardless of reward: grid search stands in when the closed
// form does not apply.
double response(int i, const Profile& x, const GameSpec& spec) {
    if (spec.reward()) return grid_best_response(i, x, spec, GridConfig::for_spec(spec));
    return best_response(i, x, spec);
}

}  // namespace

std::string to_string(DisruptionRule rule) {
    switch (rule) {
        case DisruptionRule::JoinOneValue: return "join-one-value";
        case DisruptionRule::JoinTwoValue: return "join-two-value";
        case DisruptionRule::LeaveOneValue: return "leave-one-value";
        case DisruptionRule::LeaveTwoValue: return "leave-two-value";
        case DisruptionRule::DeviateOneValue: return "deviate-one-value";
        case DisruptionRule::DeviateTwoValue: return "deviate-two-value";
    }
    return "?";
}

DisruptionPrediction predict_join(const GameSpec& spec, const Profile& x,
                                  const EquilibriumReport& rep, PlayerParams newcomer) {
    reject_reward(spec);
    require_classified(rep);
    if (!(newcomer.cost > 0.0 && newcomer.valuation > 0.0))
        throw std::invalid_argument("newcomer parameters must be positive");

    const double beta_new = newcomer.benefit_cost();
    const double S = x.total();
    Margin m;
    DisruptionPrediction out;

    if (rep.family == Family::TwoValue) {
        out.rule = DisruptionRule::JoinTwoValue;
        // Any positive entry response overshoots the minor's exact fill.
        m.note(S, beta_new);
        out.others_change = S < beta_new;
        out.details = out.others_change ? "entry response is positive: the minor's fill must drop"
                                        : "total already covers the newcomer's ratio";
        out.boundary_margin = m.value;
        return out;
    }

    out.rule = DisruptionRule::JoinOneValue;
    const double x_eq = *rep.eq_value;
    if (x_eq <= 0.0) {
        out.others_change = false;
        out.boundary_margin = m.value;
        out.details = "all-zero state: the newcomer's entry response is 0";
        return out;
    }
    auto contrib = contributors_of(spec, rep);
    m.note(beta_new, S);
    double entry = std::max(0.0, std::min(x_eq, beta_new - S));
    if (entry <= 0.0) {
        out.others_change = false;
        out.details = "newcomer free-rides: the incumbent total covers its ratio";
    } else {
        double b1 = min_beta(spec, contrib);
        m.note(b1, S + entry);
        out.others_change = b1 < S + entry;
        std::ostringstream os;
        os << "entry response " << entry << (out.others_change ? " squeezes" : " leaves room for")
           << " the lowest-ratio contributor";
        out.details = os.str();
    }
    out.boundary_margin = m.value;
    return out;
}

DisruptionPrediction predict_leave(const GameSpec& spec, const Profile&,
                                   const EquilibriumReport& rep, int leaver) {
    reject_reward(spec);
    require_classified(rep);
    if (leaver < 0 || leaver >= spec.n()) throw std::invalid_argument("leaver out of range");

    Margin m;
    DisruptionPrediction out;
    const Vec& betas = spec.betas();

    if (rep.family == Family::OneValue) {
        out.rule = DisruptionRule::LeaveOneValue;
        const double x_eq = *rep.eq_value;
        if (is_free_rider(rep, leaver) || x_eq <= 0.0) {
            out.others_change = false;
            out.boundary_margin = m.value;
            out.details = "leaver contributes nothing: no sum or max shifts";
            return out;
        }
        auto contrib = contributors_of(spec, rep);
        const int m_rem = static_cast<int>(contrib.size()) - 1;
        if (m_rem < 2) {
            // A lone contributor is capped by the max of others (= 0).
            out.others_change = true;
            out.boundary_margin = m.value;
            out.details = "lone remaining contributor collapses to zero";
            return out;
        }
        bool any = false;
        for (int j : contrib) {
            if (j == leaver) continue;
            m.note(betas(j), m_rem * x_eq);
            if (betas(j) < m_rem * x_eq) any = true;  // never fires inside the family bounds
        }
        int reenter = 0;
        for (int f : rep.free_riders) {
            m.note(betas(f), m_rem * x_eq);
            if (betas(f) > m_rem * x_eq) ++reenter;
        }
        out.others_change = any || reenter > 0;
        std::ostringstream os;
        os << "remaining contributors hold; " << reenter << " free rider(s) re-enter";
        out.details = os.str();
        out.boundary_margin = m.value;
        return out;
    }

    out.rule = DisruptionRule::LeaveTwoValue;
    const double x_M = *rep.eq_value;
    const double x_m = *rep.minor_value;
    const int minor = *rep.minor_player;
    if (is_free_rider(rep, leaver)) {
        out.others_change = false;
        out.boundary_margin = m.value;
        out.details = "leaver contributes nothing: no sum or max shifts";
        return out;
    }
    if (leaver == minor) {
        auto contrib = contributors_of(spec, rep);
        const int q = static_cast<int>(contrib.size()) - 1;
        bool any = false;
        for (int j : contrib) {
            if (j == minor) continue;
            m.note(betas(j), q * x_M);
            if (betas(j) < q * x_M) any = true;  // never fires inside the family bounds
        }
        int reenter = 0;
        for (int f : rep.free_riders) {
            m.note(betas(f), q * x_M);
            if (betas(f) > q * x_M) ++reenter;
        }
        out.others_change = any || reenter > 0;
        std::ostringstream os;
        os << "majors hold; " << reenter << " free rider(s) re-enter";
        out.details = os.str();
        out.boundary_margin = m.value;
        return out;
    }
    // A major leaves: the minor's exact fill moves to the major value.
    out.others_change = true;
    m.note(x_M, x_m);
    out.boundary_margin = m.value;
    out.details = "a major left: the minor's fill must rise";
    return out;
}

DisruptionPrediction predict_deviation(const GameSpec& spec, const Profile& x,
                                       const EquilibriumReport& rep, int deviator,
                                       double new_value) {
    reject_reward(spec);
    require_classified(rep);
    if (deviator < 0 || deviator >= spec.n()) throw std::invalid_argument("deviator out of range");
    if (!(std::isfinite(new_value) && new_value >= 0.0))
        throw std::invalid_argument("deviation value must be nonnegative and finite");

    Margin m;
    DisruptionPrediction out;
    out.rule = rep.family == Family::OneValue ? DisruptionRule::DeviateOneValue
                                              : DisruptionRule::DeviateTwoValue;
    const Vec& betas = spec.betas();
    const double y = new_value;
    m.note(y, x[deviator]);
    if (close(y, x[deviator], spec.tolerance())) {
        out.others_change = false;
        out.boundary_margin = m.value;
        out.details = "no-op deviation";
        return out;
    }

    if (rep.family == Family::OneValue) {
        const double x_eq = *rep.eq_value;
        auto contrib = contributors_of(spec, rep);
        const int n_c = static_cast<int>(contrib.size());
        if (x_eq <= 0.0) {
            // All-zero state: anyone with a larger ratio follows the deviator up.
            double bmax = 0.0;
            for (int j = 0; j < spec.n(); ++j)
                if (j != deviator) bmax = std::max(bmax, betas(j));
            m.note(bmax, y);
            out.others_change = bmax > y;
            out.details = "all-zero state: others follow iff some ratio exceeds the new value";
            out.boundary_margin = m.value;
            return out;
        }
        if (!is_free_rider(rep, deviator)) {
            m.note(y, x_eq);
            if (y > x_eq) {
                out.others_change = true;
                // A contributor holds only at the exact fill kink.
                for (int j : contrib)
                    if (j != deviator) m.note(betas(j), y + (n_c - 1) * x_eq);
                out.details = "raised above the shared value: the others' caps and fills move";
            } else if (n_c == 2) {
                // The one other contributor loses its cap: the max of its
                // others drops to the deviator's new value.
                out.others_change = true;
                out.details = "lowered: the lone other contributor's cap falls with it";
            } else {
                int reenter = 0;
                for (int f : rep.free_riders) {
                    m.note(betas(f), (n_c - 1) * x_eq + y);
                    if (betas(f) > (n_c - 1) * x_eq + y) ++reenter;
                }
                out.others_change = reenter > 0;
                std::ostringstream os;
                os << "lowered: contributors keep their mutual caps; " << reenter
                   << " free rider(s) re-enter";
                out.details = os.str();
            }
        } else {
            // A free rider starts contributing y > 0.
            m.note(y, x_eq);
            if (y > x_eq) {
                out.others_change = true;
                for (int j : contrib) m.note(betas(j), n_c * x_eq + y);
                out.details = "free rider overshoots the shared value: contributors must move";
            } else {
                double b1 = min_beta(spec, contrib);
                m.note(b1, n_c * x_eq + y);
                out.others_change = b1 < n_c * x_eq + y;
                out.details = out.others_change
                                  ? "free rider's entry squeezes the lowest-ratio contributor"
                                  : "free rider's entry leaves every contributor's fill intact";
            }
        }
        out.boundary_margin = m.value;
        return out;
    }

    const double x_M = *rep.eq_value;
    const double x_m = *rep.minor_value;
    const int minor = *rep.minor_player;
    auto contrib = contributors_of(spec, rep);
    const int q = static_cast<int>(contrib.size()) - 1;

    if (is_free_rider(rep, deviator)) {
        out.others_change = true;  // any positive entry shifts the minor's exact fill
        m.note(y, 0.0);
        out.details = "free rider's entry shifts the minor's fill";
        out.boundary_margin = m.value;
        return out;
    }
    if (deviator != minor) {
        out.others_change = true;
        m.note(x_M, x_m);
        out.details = "a major moved: the minor's fill must move";
        out.boundary_margin = m.value;
        return out;
    }

    // Minor deviation: no change only under the literal conditions, plus no
    // free rider re-enters.
    bool cond1 = y < x_M;
    m.note(y, x_M);
    bool cond2 = true;
    double major_min_beta = std::numeric_limits<double>::infinity();
    for (int j : contrib) {
        if (j == minor) continue;
        major_min_beta = std::min(major_min_beta, betas(j));
        double rhs = (q - 1) * x_M + y + std::max(x_M, y);
        m.note(betas(j), rhs);
        if (!(betas(j) > rhs)) cond2 = false;
    }
    bool cond3 = q * y < major_min_beta;
    m.note(q * y, major_min_beta);
    int reenter = 0;
    for (int f : rep.free_riders) {
        m.note(betas(f), q * x_M + y);
        if (betas(f) > q * x_M + y) ++reenter;
    }
    out.others_change = !(cond1 && cond2 && cond3 && reenter == 0);
    std::ostringstream os;
    os << "minor deviation: below-major " << (cond1 ? "holds" : "fails") << ", major slack "
       << (cond2 ? "holds" : "fails") << ", scaled-value bound " << (cond3 ? "holds" : "fails")
       << ", " << reenter << " free rider(s) re-enter";
    out.details = os.str();
    out.boundary_margin = m.value;
    return out;
}

SettleResult apply_and_settle(const GameSpec& spec, const Profile& x,
                              const PerturbationEvent& event, const DynamicsConfig& cfg,
                              std::optional<double> observation_tol) {
    if (x.size() != spec.n()) throw std::invalid_argument("profile size mismatch");
    const double tau = observation_tol.value_or(spec.tolerance());

    if (const auto* join = std::get_if<JoinEvent>(&event)) {
        GameSpec post = spec.with_player(join->params);
        Profile start = x.appended(0.0);
        int newcomer = post.n() - 1;
        // The newcomer moves first; incumbents react to the entry response.
        Profile with_entry = start.with(newcomer, response(newcomer, start, post));
        bool obs = false;
        for (int i = 0; i < spec.n(); ++i)
            if (!close(response(i, with_entry, post), x[i], tau)) obs = true;
        Trace tr = run(start, post, cfg);
        return SettleResult{std::move(post), std::move(start), std::move(tr), obs};
    }
    if (const auto* leave = std::get_if<LeaveEvent>(&event)) {
        if (leave->player < 0 || leave->player >= spec.n())
            throw std::invalid_argument("leaver out of range");
        GameSpec post = spec.without_player(leave->player);
        Profile start = x.erased(leave->player);
        bool obs = false;
        for (int i = 0; i < post.n(); ++i)
            if (!close(response(i, start, post), start[i], tau)) obs = true;
        Trace tr = run(start, post, cfg);
        return SettleResult{std::move(post), std::move(start), std::move(tr), obs};
    }
    const auto& dev = std::get<DeviateEvent>(event);
    if (dev.player < 0 || dev.player >= spec.n())
        throw std::invalid_argument("deviator out of range");
    if (!(std::isfinite(dev.value) && dev.value >= 0.0))
        throw std::invalid_argument("deviation value must be nonnegative and finite");
    Profile start = x.with(dev.player, dev.value);
    bool obs = false;
    for (int i = 0; i < spec.n(); ++i)
        if (i != dev.player && !close(response(i, start, spec), x[i], tau)) obs = true;
    std::set<int> frozen;
    if (dev.frozen) frozen.insert(dev.player);
    Trace tr = run(start, spec, cfg, frozen);
    return SettleResult{spec, std::move(start), std::move(tr), obs};
}

Profile coalition_merge(const Profile& x, const std::vector<int>& members) {
    if (members.empty()) throw std::invalid_argument("coalition must be non-empty");
    std::vector<int> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("coalition members must be distinct");
    if (sorted.front() < 0 || sorted.back() >= x.size())
        throw std::invalid_argument("coalition member out of range");

    double pooled = 0.0;
    for (int i : sorted) pooled += x[i];
    const int slot = sorted.front();
    Vec merged(x.size() - static_cast<int>(sorted.size()) + 1);
    int k = 0;
    for (int i = 0; i < x.size(); ++i) {
        bool member = std::binary_search(sorted.begin(), sorted.end(), i);
        if (i == slot)
            merged(k++) = pooled;
        else if (!member)
            merged(k++) = x[i];
    }
    return Profile(std::move(merged));
}

NonMyopicReport non_myopic_search(const GameSpec& spec, const Profile& equilibrium, int deviator,
                                  const DynamicsConfig& cfg, double K,
                                  std::optional<double> grid_step) {
    if (deviator < 0 || deviator >= spec.n()) throw std::invalid_argument("deviator out of range");
    const double base = equilibrium[deviator];
    if (!(base > 0.0))
        throw std::invalid_argument("the deviator must be contributing at the equilibrium");
    if (!(K > 1.0)) throw std::invalid_argument("K must exceed 1");
    const double g = grid_step.value_or(base / 50.0);
    if (!(g > 0.0)) throw std::invalid_argument("grid step must be positive");

    NonMyopicReport rep;
    rep.deviator = deviator;
    rep.diagnostic = !spec.reward().has_value();
    const double u0 = utility(deviator, equilibrium, spec);
    for (double y = base + g; y <= K * base + g * 1e-9; y += g) {
        Profile start = equilibrium.with(deviator, y);
        Trace tr = run(start, spec, cfg, {deviator});
        const Profile& settled = tr.steps.back();
        double delta = utility(deviator, settled, spec) - u0;
        if (delta > spec.tolerance()) rep.any_positive = true;
        rep.outcomes.push_back(NonMyopicOutcome{y, settled, delta});
    }
    std::stable_sort(rep.outcomes.begin(), rep.outcomes.end(),
                     [](const NonMyopicOutcome& a, const NonMyopicOutcome& b) {
                         return a.utility_delta > b.utility_delta;
                     });
    return rep;
}

}  // namespace nteg
