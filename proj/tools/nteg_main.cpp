#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nteg/equilibrium.hpp"
#include "nteg/model.hpp"
#include "nteg/oracle.hpp"
#include "nteg/perturbation.hpp"
#include "nteg/report.hpp"
#include "nteg/scenario.hpp"

namespace {

using namespace nteg;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;          // bad arguments / malformed input
constexpr int kExitNotConverged = 2;   // dynamics ended in a cycle or ran out of steps
constexpr int kExitDisagreement = 3;   // closed-form and simulated/oracle verdicts differ

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out << content;
}

GameSpec spec_from_lists(const std::vector<double>& betas, const std::vector<double>& valuations,
                         const std::vector<double>& costs, std::optional<double> reward,
                         double tolerance) {
    std::vector<PlayerParams> players;
    if (!betas.empty()) {
        if (!valuations.empty() || !costs.empty())
            throw std::runtime_error("--beta excludes --valuation/--cost");
        for (double b : betas) players.push_back({1.0, b});
    } else {
        if (valuations.size() != costs.size() || valuations.empty())
            throw std::runtime_error("--valuation and --cost need the same nonzero length");
        for (std::size_t i = 0; i < valuations.size(); ++i)
            players.push_back({costs[i], valuations[i]});
    }
    return GameSpec(std::move(players), reward, tolerance);
}

Profile profile_from(const std::vector<double>& xs) {
    Vec v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<Eigen::Index>(i)) = xs[i];
    return Profile(v);
}

std::string default_output(const std::string& scenario_path, const char* ext) {
    return std::filesystem::path(scenario_path).stem().string() + ext;
}

int cmd_simulate(const std::string& path, std::optional<std::string> out_dir,
                 std::optional<std::string> csv_path, std::optional<std::string> svg_path) {
    Scenario sc = load_scenario(path);
    SimulationResult res = run_scenario(sc);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        if (!csv_path) csv_path = (std::filesystem::path(*out_dir) / "trace.csv").string();
        if (!svg_path) svg_path = (std::filesystem::path(*out_dir) / "trace.svg").string();
    }
    bool want_csv = csv_path.has_value();
    bool want_svg = svg_path.has_value();
    for (const std::string& o : sc.outputs) {
        if (o == "csv" && !csv_path) {
            csv_path = default_output(path, ".csv");
            want_csv = true;
        }
        if (o == "svg" && !svg_path) {
            svg_path = default_output(path, ".svg");
            want_svg = true;
        }
    }
    if (want_csv) {
        write_file(*csv_path, to_csv(res.rows));
        std::cout << "trace written: " << *csv_path << "\n";
    }
    if (want_svg) {
        write_file(*svg_path, to_svg(res.rows, sc.title));
        std::cout << "plot written: " << *svg_path << "\n";
    }

    std::cout << "outcome: " << outcome_name(res.outcome);
    if (res.outcome == Outcome::CycleDetected) std::cout << " (period " << res.cycle_period << ")";
    std::cout << "\nsteps: " << res.steps_total << " (settled after " << res.steps_to_settle
              << ")\n";
    std::cout << "final reliability: " << format_sig(reliability(res.final_profile)) << "\n";
    std::cout << report_text(res.final_report, res.final_spec);
    std::cout << report_json(res.final_report) << "\n";
    return res.outcome == Outcome::Converged ? kExitOk : kExitNotConverged;
}

int cmd_equilibria(const GameSpec& spec) {
    std::cout << "players: " << spec.n() << "\n";
    std::cout << "benefit-cost ratios (ascending):";
    for (int i : spec.beta_order())
        std::cout << " " << format_sig(spec.betas()(i)) << " (player " << (i + 1) << ")";
    std::cout << "\n\n";

    if (!spec.reward()) {
        std::cout << "one-value family (k lowest-ratio players free-ride, the rest share one value):\n";
        for (const OneValueRange& r : one_value_ranges(spec)) {
            std::cout << "  free riders " << r.free_riders << ": shared value in ["
                      << format_sig(r.range.lo) << ", " << format_sig(r.range.hi) << "]";
            if (r.range.empty()) std::cout << " (empty)";
            if (!r.feasible) std::cout << " — infeasible (fewer than 2 contributors)";
            std::cout << "\n";
        }
        std::cout << "\ntwo-value family (one minor contributor below the majors):\n";
        std::vector<TwoValueRange> two = two_value_ranges(spec);
        if (two.empty()) std::cout << "  (none: needs at least 2 majors)\n";
        for (const TwoValueRange& r : two) {
            int player = spec.beta_order()[r.minor_rank];
            std::cout << "  minor player " << (player + 1) << ": major value in ("
                      << format_sig(r.major_range.lo) << ", " << format_sig(r.major_range.hi)
                      << "), minor = ratio - majors * major";
            if (r.major_range.empty()) std::cout << " (empty)";
            std::cout << "\n";
        }
        if (spec.n() == 2) {
            Interval range = two_player_equilibrium_range(spec);
            std::cout << "\ntwo-player symmetric equilibria: (x, x) for x in ["
                      << format_sig(range.lo) << ", " << format_sig(range.hi) << "]\n";
        }
    } else if (spec.n() == 2) {
        RewardEquilibriumBounds bounds = reward_two_player_bounds(spec);
        Interval sym = bounds.symmetric();
        std::cout << "two-player reward game, symmetric equilibria (x, x):\n";
        for (int k = 0; k < 2; ++k)
            std::cout << "  player " << (k + 1) << " bound: (" << format_sig(bounds.per_player[k].lo)
                      << ", " << format_sig(bounds.per_player[k].hi) << ")\n";
        std::cout << "  intersection: (" << format_sig(sym.lo) << ", " << format_sig(sym.hi)
                  << ")\n";
    } else {
        std::cout << "reward games beyond 2 players have no closed-form catalogue here; "
                     "use `verify` with a grid search.\n";
    }
    return kExitOk;
}

int cmd_perturb(const std::string& path, const std::string& event_json,
                std::optional<double> observation_tol) {
    Scenario sc = load_scenario(path);
    SimulationResult settled = run_scenario(sc);
    if (settled.outcome != Outcome::Converged) {
        std::cout << "scenario did not converge (" << outcome_name(settled.outcome)
                  << "); nothing to perturb\n";
        return kExitNotConverged;
    }
    if (!settled.final_report.is_equilibrium) {
        std::cout << "settled profile is not certified as an equilibrium; cannot predict\n";
        return kExitNotConverged;
    }

    const GameSpec& spec = settled.final_spec;
    const Profile& x = settled.final_profile;
    EquilibriumReport rep = settled.final_report;

    ScenarioEvent ev = event_from_json_text(event_json, "--event");
    PerturbationEvent event = [&]() -> PerturbationEvent {
        switch (ev.kind) {
            case ScenarioEvent::Kind::Join: return JoinEvent{ev.params};
            case ScenarioEvent::Kind::Leave: {
                auto it = std::find(settled.final_ids.begin(), settled.final_ids.end(), ev.player_id);
                if (it == settled.final_ids.end())
                    throw std::runtime_error("--event: player id not present");
                return LeaveEvent{static_cast<int>(it - settled.final_ids.begin())};
            }
            case ScenarioEvent::Kind::Deviate: {
                auto it = std::find(settled.final_ids.begin(), settled.final_ids.end(), ev.player_id);
                if (it == settled.final_ids.end())
                    throw std::runtime_error("--event: player id not present");
                return DeviateEvent{static_cast<int>(it - settled.final_ids.begin()), ev.value,
                                    ev.frozen};
            }
        }
        throw std::runtime_error("--event: unreachable kind");
    }();

    DisruptionPrediction pred = [&] {
        if (std::holds_alternative<JoinEvent>(event))
            return predict_join(spec, x, rep, std::get<JoinEvent>(event).params);
        if (std::holds_alternative<LeaveEvent>(event))
            return predict_leave(spec, x, rep, std::get<LeaveEvent>(event).player);
        const DeviateEvent& d = std::get<DeviateEvent>(event);
        return predict_deviation(spec, x, rep, d.player, d.value);
    }();

    SettleResult result = apply_and_settle(spec, x, event, sc.dynamics, observation_tol);

    std::cout << "settled equilibrium:\n" << report_text(rep, spec) << "\n";
    std::cout << "prediction (" << to_string(pred.rule) << "): others "
              << (pred.others_change ? "adjust" : "hold") << "\n";
    std::cout << "  " << pred.details << "\n";
    bool boundary = pred.boundary_margin <= 10 * spec.tolerance();
    if (boundary) std::cout << "  note: decision margin " << format_sig(pred.boundary_margin)
                            << " is within 10 tolerances; verdicts this close are not stable\n";
    std::cout << "observed: others " << (result.observed_change ? "adjust" : "hold") << "\n";
    std::cout << "re-settled outcome: " << outcome_name(result.trace.outcome) << "\n";
    std::cout << report_text(result.trace.final_report, result.post_spec);

    if (pred.others_change != result.observed_change) {
        std::cout << "DISAGREEMENT: prediction and observation differ";
        if (boundary) std::cout << " (inside the boundary band; expected to be unstable)";
        std::cout << "\n";
        return kExitDisagreement;
    }
    std::cout << "prediction and observation agree\n";
    return result.trace.outcome == Outcome::Converged ? kExitOk : kExitNotConverged;
}

// Relative distance of a classified equilibrium to the nearest edge of its
// family interval; infinity when not applicable.
double family_edge_margin(const EquilibriumReport& rep, const GameSpec& spec) {
    double m = std::numeric_limits<double>::infinity();
    if (!rep.is_equilibrium || !rep.eq_value) return m;
    double v = *rep.eq_value;
    auto note = [&](double edge) { m = std::min(m, std::abs(v - edge) / cmp_scale(v, edge)); };
    if (rep.family == Family::OneValue) {
        for (const OneValueRange& r : one_value_ranges(spec)) {
            if (r.free_riders != static_cast<int>(rep.free_riders.size())) continue;
            note(r.range.lo);
            note(r.range.hi);
        }
    } else if (rep.family == Family::TwoValue) {
        for (const TwoValueRange& r : two_value_ranges(spec)) {
            if (r.minor_rank != static_cast<int>(rep.free_riders.size())) continue;
            note(r.major_range.lo);
            note(r.major_range.hi);
        }
    }
    return m;
}

int cmd_verify(const GameSpec& spec, const Profile& x, double step, double margin) {
    GridConfig grid = GridConfig::for_spec(spec, step);
    bool oracle_eq = verify_equilibrium(x, spec, grid, margin);
    std::cout << "grid check (step " << format_sig(grid.step) << ", upper "
              << format_sig(grid.upper) << ", margin " << format_sig(margin) << "): "
              << (oracle_eq ? "no profitable move found" : "profitable move exists") << "\n";
    if (spec.reward()) {
        std::cout << "reward game: family classification not applicable\n";
        return kExitOk;
    }
    EquilibriumReport rep = classify(x, spec);
    std::cout << report_text(rep, spec);
    double edge = family_edge_margin(rep, spec);
    bool boundary = edge <= std::max(10 * spec.tolerance(), grid.step);
    if (boundary)
        std::cout << "boundary: the value sits within " << format_sig(edge)
                  << " of a family edge; grid verdicts this close are only "
                     "grid-step accurate\n";
    if (rep.is_equilibrium != oracle_eq) {
        if (boundary) {
            std::cout << "verdicts differ inside the boundary band (not counted as a "
                         "disagreement)\n";
            return kExitOk;
        }
        std::cout << "DISAGREEMENT: closed-form and grid verdicts differ\n";
        return kExitDisagreement;
    }
    std::cout << "closed-form and grid verdicts agree\n";
    return kExitOk;
}

int cmd_sweep(const std::string& path, const std::string& axis_name,
              const std::vector<double>& values, int jobs, std::optional<std::string> out_path) {
    std::optional<SweepAxis> axis = sweep_axis_from(axis_name);
    if (!axis)
        throw std::runtime_error("--axis must be one of delta, delta_up, delta_down, cap, seed");
    Scenario sc = load_scenario(path);
    std::vector<SweepRow> rows = run_sweep(sc, *axis, values, jobs);
    std::string csv = sweep_csv(rows, *axis);
    if (*axis == SweepAxis::Delta || *axis == SweepAxis::DeltaUp ||
        *axis == SweepAxis::DeltaDown) {
        std::cerr << "note: across random instances the binding limit is the one on "
                     "decreases -- tightening delta_down raises the settled shared value, "
                     "tightening delta_up lowers it\n";
    }
    if (out_path) {
        write_file(*out_path, csv);
        std::cout << "sweep written: " << *out_path << "\n";
    } else {
        std::cout << csv;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"normalised-total-effort contribution games: equilibria, dynamics, perturbations"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run best-response dynamics from a scenario file");
    std::string sim_path;
    std::optional<std::string> sim_out, sim_csv, sim_svg;
    sim->add_option("scenario", sim_path, "scenario JSON file")->required();
    sim->add_option("--out", sim_out, "directory for trace.csv and trace.svg");
    sim->add_option("--csv", sim_csv, "write the step trace as CSV to this path");
    sim->add_option("--svg", sim_svg, "write a contribution plot as SVG to this path");

    // equilibria
    auto* eq = app.add_subcommand("equilibria", "list the equilibrium catalogue of a game");
    std::vector<double> eq_betas, eq_vals, eq_costs;
    std::optional<double> eq_reward;
    double eq_tol = 1e-9;
    eq->add_option("--beta", eq_betas, "benefit-cost ratios (cost 1 each)")->delimiter(',');
    eq->add_option("--valuation,--v", eq_vals, "valuations")->delimiter(',');
    eq->add_option("--cost,--c", eq_costs, "costs")->delimiter(',');
    eq->add_option("--reward", eq_reward, "shared reward pool");
    eq->add_option("--tolerance", eq_tol, "comparison tolerance");

    // perturb
    auto* pert = app.add_subcommand("perturb",
                                    "settle a scenario, apply one event, compare the closed-form "
                                    "prediction with the simulated outcome");
    std::string pert_path, pert_event;
    std::optional<double> pert_obs_tol;
    pert->add_option("scenario", pert_path, "scenario JSON file")->required();
    pert->add_option("--event", pert_event, "event JSON, e.g. {\"kind\":\"leave\",\"player\":2}")
        ->required();
    pert->add_option("--observation-tol", pert_obs_tol,
                     "threshold for counting a first-step move as a change");

    // verify
    auto* ver = app.add_subcommand("verify", "check a profile by grid search and classification");
    std::vector<double> ver_profile, ver_betas, ver_vals, ver_costs;
    std::optional<double> ver_reward;
    double ver_tol = 1e-9, ver_step = 1e-3, ver_margin = 1e-6;
    ver->add_option("--profile", ver_profile, "contribution profile")->required()->delimiter(',');
    ver->add_option("--beta", ver_betas, "benefit-cost ratios (cost 1 each)")->delimiter(',');
    ver->add_option("--valuation,--v", ver_vals, "valuations")->delimiter(',');
    ver->add_option("--cost,--c", ver_costs, "costs")->delimiter(',');
    ver->add_option("--reward", ver_reward, "shared reward pool");
    ver->add_option("--tolerance", ver_tol, "comparison tolerance");
    ver->add_option("--step", ver_step, "grid step");
    ver->add_option("--margin", ver_margin, "utility-improvement margin for the grid check");

    // sweep
    auto* sw = app.add_subcommand("sweep", "re-run a scenario across one parameter axis");
    std::string sw_path, sw_axis;
    std::vector<double> sw_values;
    int sw_jobs = static_cast<int>(std::thread::hardware_concurrency());
    std::optional<std::string> sw_out;
    sw->add_option("scenario", sw_path, "scenario JSON file")->required();
    sw->add_option("--axis", sw_axis, "delta | delta_up | delta_down | cap | seed")->required();
    sw->add_option("--values", sw_values, "axis values")->required()->delimiter(',');
    sw->add_option("--jobs", sw_jobs, "parallel runs");
    sw->add_option("--out", sw_out, "write the sweep table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_path, sim_out, sim_csv, sim_svg);
        if (eq->parsed())
            return cmd_equilibria(spec_from_lists(eq_betas, eq_vals, eq_costs, eq_reward, eq_tol));
        if (pert->parsed()) return cmd_perturb(pert_path, pert_event, pert_obs_tol);
        if (ver->parsed())
            return cmd_verify(spec_from_lists(ver_betas, ver_vals, ver_costs, ver_reward, ver_tol),
                              profile_from(ver_profile), ver_step, ver_margin);
        if (sw->parsed()) return cmd_sweep(sw_path, sw_axis, sw_values, sw_jobs, sw_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
