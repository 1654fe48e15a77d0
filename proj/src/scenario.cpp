#include "nteg/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace nteg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw ScenarioError(origin + ": " + msg);
}

void require_object(const json& j, const std::string& origin, const std::string& where) {
    if (!j.is_object()) fail(origin, where + " must be an object");
}

void require_keys(const json& j, const std::string& origin, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) fail(origin, where + ": unknown key \"" + it.key() + "\"");
    }
}

double number_field(const json& j, const char* key, const std::string& origin,
                    const std::string& where) {
    if (!j.contains(key)) fail(origin, where + ": missing \"" + std::string(key) + "\"");
    if (!j[key].is_number()) fail(origin, where + ": \"" + std::string(key) + "\" must be a number");
    return j[key].get<double>();
}

int int_field(const json& j, const char* key, const std::string& origin,
              const std::string& where) {
    if (!j.contains(key)) fail(origin, where + ": missing \"" + std::string(key) + "\"");
    if (!j[key].is_number_integer())
        fail(origin, where + ": \"" + std::string(key) + "\" must be an integer");
    return j[key].get<int>();
}

std::pair<double, double> range_field(const json& j, const char* key, const std::string& origin,
                                      const std::string& where) {
    if (!j.contains(key)) fail(origin, where + ": missing \"" + std::string(key) + "\"");
    const json& a = j[key];
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        fail(origin, where + ": \"" + std::string(key) + "\" must be [lo, hi]");
    return {a[0].get<double>(), a[1].get<double>()};
}

GameSpec parse_spec(const json& j, const std::string& origin) {
    require_object(j, origin, "spec");
    require_keys(j, origin, "spec", {"players", "reward", "tolerance"});
    if (!j.contains("players") || !j["players"].is_array() || j["players"].empty())
        fail(origin, "spec: \"players\" must be a non-empty array");
    std::vector<PlayerParams> players;
    for (std::size_t i = 0; i < j["players"].size(); ++i) {
        const json& p = j["players"][i];
        std::string where = "spec.players[" + std::to_string(i) + "]";
        require_object(p, origin, where);
        require_keys(p, origin, where, {"cost", "valuation"});
        players.push_back({number_field(p, "cost", origin, where),
                           number_field(p, "valuation", origin, where)});
    }
    std::optional<double> reward;
    if (j.contains("reward")) {
        if (j["reward"].is_null()) {
            // explicit null = no reward
        } else if (j["reward"].is_number()) {
            reward = j["reward"].get<double>();
        } else {
            fail(origin, "spec: \"reward\" must be a number or null");
        }
    }
    double tol = j.contains("tolerance") ? number_field(j, "tolerance", origin, "spec") : 1e-9;
    try {
        return GameSpec(std::move(players), reward, tol);
    } catch (const std::exception& e) {
        fail(origin, std::string("spec: ") + e.what());
    }
}

RandomSpecParams parse_random(const json& j, const std::string& origin) {
    require_object(j, origin, "random");
    require_keys(j, origin, "random",
                 {"n", "beta_range", "x_range", "cost_range", "seed", "reward"});
    RandomSpecParams r;
    r.n = int_field(j, "n", origin, "random");
    r.beta_range = range_field(j, "beta_range", origin, "random");
    r.x_range = range_field(j, "x_range", origin, "random");
    if (j.contains("cost_range")) r.cost_range = range_field(j, "cost_range", origin, "random");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            fail(origin, "random: \"seed\" must be a nonnegative integer");
        auto s = j["seed"].get<std::int64_t>();
        if (s < 0) fail(origin, "random: \"seed\" must be nonnegative");
        r.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("reward") && !j["reward"].is_null())
        r.reward = number_field(j, "reward", origin, "random");
    return r;
}

DynamicsConfig parse_dynamics(const json& j, const std::string& origin) {
    require_object(j, origin, "dynamics");
    require_keys(j, origin, "dynamics",
                 {"max_steps", "convergence_tol", "convergence_window", "delta", "delta_up",
                  "delta_down", "total_effort_cap", "zero_escape", "seed"});
    DynamicsConfig cfg;
    if (j.contains("max_steps")) cfg.max_steps = int_field(j, "max_steps", origin, "dynamics");
    if (j.contains("convergence_tol"))
        cfg.convergence_tol = number_field(j, "convergence_tol", origin, "dynamics");
    if (j.contains("convergence_window"))
        cfg.convergence_window = int_field(j, "convergence_window", origin, "dynamics");
    if (j.contains("delta")) {
        if (j.contains("delta_up") || j.contains("delta_down"))
            fail(origin, "dynamics: \"delta\" excludes \"delta_up\"/\"delta_down\"");
        double d = number_field(j, "delta", origin, "dynamics");
        cfg.delta_up = d;
        cfg.delta_down = d;
    }
    if (j.contains("delta_up")) cfg.delta_up = number_field(j, "delta_up", origin, "dynamics");
    if (j.contains("delta_down"))
        cfg.delta_down = number_field(j, "delta_down", origin, "dynamics");
    if (j.contains("total_effort_cap"))
        cfg.total_effort_cap = number_field(j, "total_effort_cap", origin, "dynamics");
    if (j.contains("zero_escape"))
        cfg.zero_escape = number_field(j, "zero_escape", origin, "dynamics");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            fail(origin, "dynamics: \"seed\" must be a nonnegative integer");
        auto s = j["seed"].get<std::int64_t>();
        if (s < 0) fail(origin, "dynamics: \"seed\" must be nonnegative");
        cfg.rng_seed = static_cast<std::uint64_t>(s);
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        fail(origin, std::string("dynamics: ") + e.what());
    }
    return cfg;
}

ScenarioEvent parse_event(const json& j, std::size_t idx, const std::string& origin) {
    std::string where = "events[" + std::to_string(idx) + "]";
    require_object(j, origin, where);
    if (!j.contains("kind") || !j["kind"].is_string())
        fail(origin, where + ": missing \"kind\"");
    std::string kind = j["kind"].get<std::string>();
    ScenarioEvent ev;
    ev.step = int_field(j, "step", origin, where);
    if (ev.step < 1) fail(origin, where + ": \"step\" must be >= 1");
    if (kind == "join") {
        require_keys(j, origin, where, {"step", "kind", "cost", "valuation"});
        ev.kind = ScenarioEvent::Kind::Join;
        ev.params = {number_field(j, "cost", origin, where),
                     number_field(j, "valuation", origin, where)};
    } else if (kind == "leave") {
        require_keys(j, origin, where, {"step", "kind", "player"});
        ev.kind = ScenarioEvent::Kind::Leave;
        ev.player_id = int_field(j, "player", origin, where);
    } else if (kind == "deviate") {
        require_keys(j, origin, where, {"step", "kind", "player", "value", "frozen"});
        ev.kind = ScenarioEvent::Kind::Deviate;
        ev.player_id = int_field(j, "player", origin, where);
        ev.value = number_field(j, "value", origin, where);
        if (ev.value < 0) fail(origin, where + ": \"value\" must be nonnegative");
        if (j.contains("frozen")) {
            if (!j["frozen"].is_boolean()) fail(origin, where + ": \"frozen\" must be a boolean");
            ev.frozen = j["frozen"].get<bool>();
        }
    } else {
        fail(origin, where + ": unknown kind \"" + kind + "\"");
    }
    return ev;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("invalid JSON: ") + e.what());
    }
    require_object(j, origin, "scenario");
    require_keys(j, origin, "scenario",
                 {"spec", "random", "initial", "dynamics", "events", "outputs", "title"});

    Scenario s;
    if (j.contains("spec") == j.contains("random"))
        fail(origin, "scenario: exactly one of \"spec\" / \"random\" is required");
    if (j.contains("spec")) s.spec = parse_spec(j["spec"], origin);
    if (j.contains("random")) s.random = parse_random(j["random"], origin);

    if (j.contains("initial")) {
        if (!j["initial"].is_array()) fail(origin, "scenario: \"initial\" must be an array");
        std::vector<double> xs;
        for (const json& v : j["initial"]) {
            if (!v.is_number()) fail(origin, "scenario: \"initial\" entries must be numbers");
            xs.push_back(v.get<double>());
        }
        s.initial = std::move(xs);
    }
    if (s.spec && !s.initial)
        fail(origin, "scenario: an explicit \"spec\" requires \"initial\"");
    if (s.spec && static_cast<int>(s.initial->size()) != s.spec->n())
        fail(origin, "scenario: \"initial\" size must match the player count");
    if (s.random && s.initial && static_cast<int>(s.initial->size()) != s.random->n)
        fail(origin, "scenario: \"initial\" size must match random.n");

    if (j.contains("dynamics")) s.dynamics = parse_dynamics(j["dynamics"], origin);

    if (j.contains("events")) {
        if (!j["events"].is_array()) fail(origin, "scenario: \"events\" must be an array");
        for (std::size_t i = 0; i < j["events"].size(); ++i)
            s.events.push_back(parse_event(j["events"][i], i, origin));
        for (std::size_t i = 1; i < s.events.size(); ++i)
            if (s.events[i].step <= s.events[i - 1].step)
                fail(origin, "scenario: event steps must be strictly increasing");
        if (!s.events.empty() && s.events.back().step >= s.dynamics.max_steps)
            fail(origin, "scenario: event steps must be below dynamics.max_steps");
    }

    if (j.contains("outputs")) {
        if (!j["outputs"].is_array()) fail(origin, "scenario: \"outputs\" must be an array");
        for (const json& v : j["outputs"]) {
            if (!v.is_string()) fail(origin, "scenario: \"outputs\" entries must be strings");
            std::string o = v.get<std::string>();
            if (o != "csv" && o != "svg" && o != "report")
                fail(origin, "scenario: unknown output \"" + o + "\"");
            s.outputs.push_back(o);
        }
    }
    if (j.contains("title")) {
        if (!j["title"].is_string()) fail(origin, "scenario: \"title\" must be a string");
        s.title = j["title"].get<std::string>();
    }
    return s;
}

ScenarioEvent event_from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("invalid JSON: ") + e.what());
    }
    require_object(j, origin, "event");
    if (!j.contains("step")) j["step"] = 1;
    return parse_event(j, 0, origin);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario s = scenario_from_json_text(buf.str(), path);
    if (const char* env = std::getenv("NTEG_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw ScenarioError("NTEG_SEED: not an integer");
        if (s.random) s.random->seed = v;
        s.dynamics.rng_seed = v;
    }
    return s;
}

namespace {

int position_of(const std::vector<int>& ids, int id, int at_step) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end())
        throw ScenarioError("event at step " + std::to_string(at_step) + ": player id " +
                            std::to_string(id) + " is not present");
    return static_cast<int>(it - ids.begin());
}

}  // namespace

SimulationResult run_scenario(const Scenario& scenario) {
    GameSpec spec = [&] {
        if (scenario.spec) return *scenario.spec;
        const RandomSpecParams& r = *scenario.random;
        return random_instance(r.n, r.beta_range, r.x_range, r.seed, r.cost_range, r.reward).spec;
    }();
    Profile x = [&] {
        if (scenario.initial) {
            Vec v(scenario.initial->size());
            for (std::size_t i = 0; i < scenario.initial->size(); ++i)
                v(static_cast<Eigen::Index>(i)) = (*scenario.initial)[i];
            return Profile(v);
        }
        const RandomSpecParams& r = *scenario.random;
        return random_instance(r.n, r.beta_range, r.x_range, r.seed, r.cost_range, r.reward)
            .initial;
    }();

    std::vector<int> ids(spec.n());
    for (int i = 0; i < spec.n(); ++i) ids[i] = i + 1;
    int next_id = spec.n() + 1;
    std::set<int> frozen;

    std::vector<TraceRow> rows;
    auto record = [&](int step, const Profile& p) {
        double rel = reliability(p);
        for (int i = 0; i < p.size(); ++i)
            rows.push_back({step, ids[i], p[i], utility(i, p, spec), rel});
    };

    const DynamicsConfig& cfg = scenario.dynamics;
    int t = 0;
    record(0, x);

    for (const ScenarioEvent& ev : scenario.events) {
        while (t < ev.step) {
            x = step(x, spec, cfg, frozen);
            ++t;
            record(t, x);
        }
        switch (ev.kind) {
            case ScenarioEvent::Kind::Join:
                spec = spec.with_player(ev.params);
                x = x.appended(0.0);
                ids.push_back(next_id++);
                break;
            case ScenarioEvent::Kind::Leave: {
                int pos = position_of(ids, ev.player_id, ev.step);
                spec = spec.without_player(pos);
                x = x.erased(pos);
                ids.erase(ids.begin() + pos);
                std::set<int> shifted;
                for (int f : frozen) {
                    if (f == pos) continue;
                    shifted.insert(f > pos ? f - 1 : f);
                }
                frozen = std::move(shifted);
                break;
            }
            case ScenarioEvent::Kind::Deviate: {
                int pos = position_of(ids, ev.player_id, ev.step);
                x = x.with(pos, ev.value);
                if (ev.frozen) frozen.insert(pos);
                break;
            }
        }
    }

    DynamicsConfig tail_cfg = cfg;
    tail_cfg.max_steps = cfg.max_steps - t;
    Trace trace = run(x, spec, tail_cfg, frozen);
    for (std::size_t k = 1; k < trace.steps.size(); ++k) record(t + static_cast<int>(k), trace.steps[k]);
    int settle = t + trace.settle_index(cfg.convergence_tol);
    t += static_cast<int>(trace.steps.size()) - 1;

    return SimulationResult{std::move(rows),
                            trace.outcome,
                            trace.cycle_period,
                            t,
                            settle,
                            std::move(spec),
                            trace.steps.back(),
                            std::move(ids),
                            std::move(trace.final_report)};
}

std::optional<SweepAxis> sweep_axis_from(const std::string& name) {
    if (name == "delta") return SweepAxis::Delta;
    if (name == "delta_up") return SweepAxis::DeltaUp;
    if (name == "delta_down") return SweepAxis::DeltaDown;
    if (name == "cap") return SweepAxis::Cap;
    if (name == "seed") return SweepAxis::Seed;
    return std::nullopt;
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Delta: return "delta";
        case SweepAxis::DeltaUp: return "delta_up";
        case SweepAxis::DeltaDown: return "delta_down";
        case SweepAxis::Cap: return "cap";
        case SweepAxis::Seed: return "seed";
    }
    return "delta";
}

namespace {

void apply_axis(Scenario& s, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::Delta:
            s.dynamics.delta_up = value;
            s.dynamics.delta_down = value;
            break;
        case SweepAxis::DeltaUp: s.dynamics.delta_up = value; break;
        case SweepAxis::DeltaDown: s.dynamics.delta_down = value; break;
        case SweepAxis::Cap: s.dynamics.total_effort_cap = value; break;
        case SweepAxis::Seed:
            if (!s.random) throw ScenarioError("sweep: the seed axis requires a random spec");
            s.random->seed = static_cast<std::uint64_t>(value);
            break;
    }
    s.dynamics.validate();
}

SweepRow row_from(double value, const SimulationResult& res) {
    SweepRow row;
    row.value = value;
    row.outcome = res.outcome;
    row.steps_to_settle = res.steps_to_settle;
    const EquilibriumReport& rep = res.final_report;
    row.family = rep.is_equilibrium ? family_name(rep.family) : "none";
    row.shared_value =
        rep.is_equilibrium && rep.eq_value ? *rep.eq_value : std::numeric_limits<double>::quiet_NaN();
    row.contributors = rep.is_equilibrium ? rep.contributor_count(res.final_spec.n()) : 0;
    row.final_reliability = reliability(res.final_profile);
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const Scenario& base, SweepAxis axis,
                                const std::vector<double>& values, int jobs) {
    if (values.empty()) return {};
    std::vector<SweepRow> rows(values.size());
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::clamp(jobs, 1, std::max(1, hw > 0 ? hw : 4));
    jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), values.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= values.size()) return;
            try {
                Scenario s = base;
                apply_axis(s, axis, values[k]);
                rows[k] = row_from(values[k], run_scenario(s));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
    std::string out =
        to_string(axis) + ",outcome,steps_to_settle,family,shared_value,contributors,reliability\n";
    for (const SweepRow& r : rows) {
        out += format_sig(r.value);
        out += ',';
        out += outcome_name(r.outcome);
        out += ',';
        out += std::to_string(r.steps_to_settle);
        out += ',';
        out += r.family;
        out += ',';
        if (!std::isnan(r.shared_value)) out += format_sig(r.shared_value);
        out += ',';
        out += std::to_string(r.contributors);
        out += ',';
        out += format_sig(r.final_reliability);
        out += '\n';
    }
    return out;
}

}  // namespace nteg
