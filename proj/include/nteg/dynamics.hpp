#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "nteg/equilibrium.hpp"
#include "nteg/model.hpp"

namespace nteg {

/// Knobs for the synchronous best-response dynamics. Deltas are per-step
/// multiplicative move limits (absent = unconstrained in that direction); the
/// cap rations the aggregate upward change of a step; zero_escape lets a
/// zero contributor rise despite the multiplicative up-clamp.
struct DynamicsConfig {
    int max_steps = 10000;
    double convergence_tol = 1e-7;
    int convergence_window = 3;
    std::optional<double> delta_up;
    std::optional<double> delta_down;
    std::optional<double> total_effort_cap;
    double zero_escape = 0.01;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

enum class Outcome { Converged, CycleDetected, MaxStepsReached };

/// Full history of one dynamics run. steps[0] is the initial profile;
/// utilities/reliabilities align with steps.
struct Trace {
    std::vector<Profile> steps;
    std::vector<double> reliabilities;
    std::vector<Vec> utilities;
    Outcome outcome = Outcome::MaxStepsReached;
    int cycle_period = 0;  ///< set when outcome == CycleDetected
    EquilibriumReport final_report;

    /// Index of the first profile within convergence_tol of every later one.
    int settle_index(double tol) const;
    /// Profiles visited up to and including the first stable one.
    int profiles_to_settle(double tol) const { return settle_index(tol) + 1; }
};

/// One synchronous update: every non-frozen player targets its best response
/// against the current profile (grid-search response when the spec carries a
/// reward), then the move limits and the aggregate cap are applied.
Profile step(const Profile& x, const GameSpec& spec, const DynamicsConfig& cfg,
             const std::set<int>& frozen = {});

/// Iterates `step` until the max-norm change stays at or below
/// convergence_tol for convergence_window consecutive steps (Converged), a
/// profile recurs within a 200-step window at 1e-9 resolution
/// (CycleDetected, period >= 2), or max_steps runs out. The final report
/// classifies at max(spec tolerance, 10 * convergence_tol): certification
/// cannot be tighter than the convergence resolution.
Trace run(const Profile& initial, const GameSpec& spec, const DynamicsConfig& cfg,
          const std::set<int>& frozen = {});

struct RandomInstance {
    GameSpec spec;
    Profile initial;
};

/// Deterministic-in-seed random game + initial profile: costs uniform in
/// cost_range, ratios uniform in beta_range (redrawn until pairwise distinct),
/// valuations = ratio * cost, contributions uniform in x_range.
RandomInstance random_instance(int n, std::pair<double, double> beta_range,
                               std::pair<double, double> x_range, std::uint64_t seed,
                               std::pair<double, double> cost_range = {0.5, 2.0},
                               std::optional<double> reward = std::nullopt,
                               double comparison_tolerance = 1e-9);

}  // namespace nteg
