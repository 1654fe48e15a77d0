#pragma once

#include "nteg/model.hpp"

namespace nteg {

/// Brute-force search grid over contributions {0, step, 2*step, ..., <= upper}.
/// upper/step is capped so a scan stays tractable.
struct GridConfig {
    double upper;
    double step = 1e-3;

    /// Grid spanning [0, 2*max benefit-cost ratio] for this spec.
    static GridConfig for_spec(const GameSpec& spec, double step = 1e-3);

    int point_count() const;
};

/// Utility-maximising grid point for player i against the others' current
/// contributions, by exhaustive scan. Ties resolve to the smallest
/// contribution. Works with or without a reward.
double grid_best_response(int i, const Profile& x, const GameSpec& spec, const GridConfig& grid);

/// True iff no player can improve their utility by more than `margin` by
/// moving to any grid point. Brute-force counterpart of the analytic
/// equilibrium predicates; near family boundaries it is only accurate to the
/// grid resolution.
bool verify_equilibrium(const Profile& x, const GameSpec& spec, const GridConfig& grid,
                        double margin = 1e-6);

}  // namespace nteg
