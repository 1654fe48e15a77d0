#include "nteg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

namespace nteg {

std::string format_sig(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<TraceRow> trace_rows(const Trace& trace) {
    std::vector<TraceRow> rows;
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const Profile& x = trace.steps[s];
        for (int i = 0; i < x.size(); ++i) {
            rows.push_back({static_cast<int>(s), i + 1, x[i],
                            trace.utilities[s][i], trace.reliabilities[s]});
        }
    }
    return rows;
}

std::string to_csv(const std::vector<TraceRow>& rows) {
    std::string out = "step,player_id,contribution,utility,reliability\n";
    for (const TraceRow& r : rows) {
        out += std::to_string(r.step);
        out += ',';
        out += std::to_string(r.player_id);
        out += ',';
        out += format_sig(r.contribution);
        out += ',';
        out += format_sig(r.utility);
        out += ',';
        out += format_sig(r.reliability);
        out += '\n';
    }
    return out;
}

namespace {

const char* kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};
constexpr int kPaletteSize = 10;

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string to_svg(const std::vector<TraceRow>& rows, const std::string& title) {
    const double width = 860, height = 520;
    const double left = 70, right = width - 180, top = 40, bottom = height - 50;

    int max_step = 1;
    double ymax = 0;
    std::map<int, std::vector<std::pair<int, double>>> series;  // id -> (step, value)
    for (const TraceRow& r : rows) {
        max_step = std::max(max_step, r.step);
        ymax = std::max(ymax, r.contribution);
        series[r.player_id].push_back({r.step, r.contribution});
    }
    if (ymax <= 0) ymax = 1;
    ymax *= 1.05;

    auto sx = [&](double step) { return left + (right - left) * step / max_step; };
    auto sy = [&](double v) { return bottom - (bottom - top) * v / ymax; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"24\" font-family=\"sans-serif\" "
        << "font-size=\"16\" text-anchor=\"middle\">" << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        double step = max_step * t / 5.0;
        double x = sx(step);
        svg << "<line x1=\"" << coord(x) << "\" y1=\"" << bottom << "\" x2=\""
            << coord(x) << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << coord(x) << "\" y=\"" << bottom + 20
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
            << tick_label(step) << "</text>\n";

        double v = ymax * t / 5.0;
        double y = sy(v);
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << coord(y) << "\" x2=\""
            << left << "\" y2=\"" << coord(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << left - 9 << "\" y=\"" << coord(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << tick_label(v) << "</text>\n";
    }
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">step</text>\n";
    svg << "<text x=\"18\" y=\"" << (top + bottom) / 2
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 18 " << (top + bottom) / 2 << ")\">contribution</text>\n";

    // one polyline per player, legend entry alongside
    int slot = 0;
    for (const auto& [id, pts] : series) {
        const char* color = kPalette[slot % kPaletteSize];
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (k) svg << ' ';
            svg << coord(sx(pts[k].first)) << ',' << coord(sy(pts[k].second));
        }
        svg << "\"/>\n";

        double ly = top + 16 + 18 * slot;
        svg << "<line x1=\"" << right + 14 << "\" y1=\"" << coord(ly) << "\" x2=\""
            << right + 38 << "\" y2=\"" << coord(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        svg << "<text x=\"" << right + 44 << "\" y=\"" << coord(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">player " << id
            << "</text>\n";
        ++slot;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string family_name(Family f) {
    switch (f) {
        case Family::OneValue: return "one-value";
        case Family::TwoValue: return "two-value";
        case Family::None: return "none";
    }
    return "none";
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Converged: return "converged";
        case Outcome::CycleDetected: return "cycle";
        case Outcome::MaxStepsReached: return "max-steps";
    }
    return "max-steps";
}

std::string report_text(const EquilibriumReport& rep, const GameSpec& spec) {
    std::ostringstream out;
    out << "equilibrium: " << (rep.is_equilibrium ? "yes" : "no") << "\n";
    out << "family: " << family_name(rep.family) << "\n";
    if (rep.is_equilibrium) {
        out << "free riders:";
        if (rep.free_riders.empty()) {
            out << " (none)";
        } else {
            for (int i : rep.free_riders) out << ' ' << (i + 1);
        }
        out << "\n";
        if (rep.family == Family::OneValue && rep.eq_value) {
            out << "shared value: " << format_sig(*rep.eq_value) << "\n";
        } else if (rep.family == Family::TwoValue && rep.eq_value) {
            out << "major value: " << format_sig(*rep.eq_value) << "\n";
            out << "minor value: " << format_sig(rep.minor_value.value_or(0)) << " (player "
                << (rep.minor_player.value_or(-1) + 1) << ")\n";
        }
        out << "contributors: " << rep.contributor_count(spec.n()) << " of " << spec.n()
            << "\n";
        if (rep.unmatched_equilibrium) out << "note: fixed point outside both families\n";
    } else {
        for (std::size_t i = 0; i < rep.witness.size(); ++i) {
            const PlayerWitness& w = rep.witness[i];
            if (std::abs(w.delta) > spec.tolerance()) {
                out << "witness: player " << (i + 1) << " would move to "
                    << format_sig(w.best_response) << " (delta " << format_sig(-w.delta)
                    << ")\n";
                break;
            }
        }
    }
    if (!rep.details.empty()) out << "details: " << rep.details << "\n";
    return out.str();
}

std::string report_json(const EquilibriumReport& rep) {
    nlohmann::json j;
    j["is_equilibrium"] = rep.is_equilibrium;
    j["family"] = family_name(rep.family);
    std::vector<int> fr;
    for (int i : rep.free_riders) fr.push_back(i + 1);
    j["free_riders"] = fr;
    if (rep.family == Family::OneValue && rep.eq_value) {
        j["shared_value"] = *rep.eq_value;
    } else if (rep.family == Family::TwoValue && rep.eq_value) {
        j["major_value"] = *rep.eq_value;
        if (rep.minor_value) j["minor_value"] = *rep.minor_value;
        if (rep.minor_player) j["minor_player"] = *rep.minor_player + 1;
    }
    j["unmatched_equilibrium"] = rep.unmatched_equilibrium;
    if (!rep.details.empty()) j["details"] = rep.details;
    return j.dump(2);
}

}  // namespace nteg
