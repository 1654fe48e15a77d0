#pragma once

#include <string>
#include <vector>

#include "nteg/dynamics.hpp"

namespace nteg {

/// Long-format trace table: one row per (step, present player). Player ids
/// are 1-based and stable across joins/leaves.
struct TraceRow {
    int step;
    int player_id;
    double contribution;
    double utility;
    double reliability;
};

/// %.12g rendering used by every emitted number.
std::string format_sig(double v);

/// Rows for a single-spec trace, ids 1..n.
std::vector<TraceRow> trace_rows(const Trace& trace);

/// CSV with header step,player_id,contribution,utility,reliability.
std::string to_csv(const std::vector<TraceRow>& rows);

/// Self-contained SVG (no external references): contribution vs step, one
/// polyline per player id, linear axes, legend. Free riders sit on the 0 line.
std::string to_svg(const std::vector<TraceRow>& rows, const std::string& title);

std::string family_name(Family f);
std::string outcome_name(Outcome o);

/// Human-readable classification block.
std::string report_text(const EquilibriumReport& rep, const GameSpec& spec);
/// Same content as a single JSON object (serialized).
std::string report_json(const EquilibriumReport& rep);

}  // namespace nteg
