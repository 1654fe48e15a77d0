#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nteg/dynamics.hpp"
#include "nteg/perturbation.hpp"
#include "nteg/report.hpp"

namespace nteg {

/// Raised for any malformed scenario file or inconsistent scenario content.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameters for drawing a random game + initial profile (see
/// random_instance). All draws are deterministic in `seed`.
struct RandomSpecParams {
    int n = 2;
    std::pair<double, double> beta_range{1.0, 10.0};
    std::pair<double, double> x_range{0.0, 3.0};
    std::pair<double, double> cost_range{0.5, 2.0};
    std::uint64_t seed = 0;
    std::optional<double> reward;
};

/// A roster/profile change scheduled inside a simulation. Fires after the
/// profile for `step` has been recorded; its effect is visible from the next
/// step on. Player references are 1-based stable ids (ids never renumber
/// when someone leaves; a newcomer gets the next unused id).
struct ScenarioEvent {
    enum class Kind { Join, Leave, Deviate };
    int step = 0;
    Kind kind = Kind::Join;
    PlayerParams params{1.0, 1.0};  ///< join
    int player_id = 0;              ///< leave / deviate
    double value = 0.0;             ///< deviate
    bool frozen = false;            ///< deviate: hold the deviator fixed afterwards
};

struct Scenario {
    std::optional<GameSpec> spec;            ///< exactly one of spec / random
    std::optional<RandomSpecParams> random;
    std::optional<std::vector<double>> initial;  ///< required with an explicit spec
    DynamicsConfig dynamics;
    std::vector<ScenarioEvent> events;  ///< strictly increasing steps
    std::vector<std::string> outputs;   ///< subset of {csv, svg, report}
    std::string title = "contribution dynamics";
};

/// Parses and validates scenario JSON. Unknown keys anywhere are errors;
/// `origin` prefixes every error message.
Scenario scenario_from_json_text(const std::string& text, const std::string& origin);

/// scenario_from_json_text on a file, then applies the NTEG_SEED environment
/// override (replaces the random-draw seed and the dynamics seed) if set.
Scenario load_scenario(const std::string& path);

/// Parses one standalone event object (same schema as scenario events;
/// "step" is optional here and defaults to 1).
ScenarioEvent event_from_json_text(const std::string& text, const std::string& origin);

struct SimulationResult {
    std::vector<TraceRow> rows;  ///< step 0 .. steps_total, 1-based stable ids
    Outcome outcome = Outcome::MaxStepsReached;
    int cycle_period = 0;
    int steps_total = 0;
    int steps_to_settle = 0;  ///< first step already within convergence_tol of the end
    GameSpec final_spec;
    Profile final_profile;
    std::vector<int> final_ids;  ///< stable id at each current position
    EquilibriumReport final_report;
};

/// Runs the dynamics, firing events at their scheduled steps, then settles
/// the final roster. max_steps bounds the total step count across segments.
SimulationResult run_scenario(const Scenario& scenario);

enum class SweepAxis { Delta, DeltaUp, DeltaDown, Cap, Seed };

std::optional<SweepAxis> sweep_axis_from(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
    double value = 0.0;
    Outcome outcome = Outcome::MaxStepsReached;
    int steps_to_settle = 0;
    std::string family;          ///< "none" when the run did not certify
    double shared_value = 0.0;   ///< NaN when not applicable
    int contributors = 0;
    double final_reliability = 0.0;
};

/// Re-runs the scenario once per axis value (Seed requires a random spec).
/// Rows come back in input order regardless of `jobs`.
std::vector<SweepRow> run_sweep(const Scenario& base, SweepAxis axis,
                                const std::vector<double>& values, int jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis);

}  // namespace nteg
