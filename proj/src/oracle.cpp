#include "nteg/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace nteg {

namespace {

constexpr double kMaxPoints = 1e6;

// Utility of player i at contribution xi with everyone else fixed, using the
// others' sum/max so a whole grid scan is O(points), not O(points * n).
double utility_at(double xi, double others_sum, double others_max, const PlayerParams& p,
                  const std::optional<double>& reward) {
    double total = others_sum + xi;
    double top = std::max(others_max, xi);
    double rel = total > 0.0 ? std::log(total / top) : 0.0;
    double share = (reward && total > 0.0) ? *reward * xi / total : 0.0;
    return p.valuation * rel - p.cost * xi + share;
}

}  // namespace

GridConfig GridConfig::for_spec(const GameSpec& spec, double step) {
    return GridConfig{2.0 * spec.betas().maxCoeff(), step};
}

int GridConfig::point_count() const {
    if (!(std::isfinite(upper) && upper >= 0.0 && std::isfinite(step) && step > 0.0))
        throw std::invalid_argument("grid needs upper >= 0 and step > 0");
    double points = std::floor(upper / step);
    if (points > kMaxPoints) throw std::invalid_argument("grid too fine: upper/step exceeds 1e6");
    return static_cast<int>(points) + 1;
}

double grid_best_response(int i, const Profile& x, const GameSpec& spec, const GridConfig& grid) {
    if (i < 0 || i >= spec.n() || x.size() != spec.n())
        throw std::invalid_argument("player index / profile size mismatch");
    const int points = grid.point_count();
    double others_sum = x.total() - x[i];
    double others_max = 0.0;
    for (int j = 0; j < x.size(); ++j)
        if (j != i) others_max = std::max(others_max, x[j]);

    double best_x = 0.0;
    double best_u = utility_at(0.0, others_sum, others_max, spec.player(i), spec.reward());
    for (int k = 1; k < points; ++k) {
        double xi = k * grid.step;
        double u = utility_at(xi, others_sum, others_max, spec.player(i), spec.reward());
        if (u > best_u) {  // strict: ties keep the smallest contribution
            best_u = u;
            best_x = xi;
        }
    }
    return best_x;
}

bool verify_equilibrium(const Profile& x, const GameSpec& spec, const GridConfig& grid,
                        double margin) {
    if (x.size() != spec.n()) throw std::invalid_argument("profile size mismatch");
    const int points = grid.point_count();
    for (int i = 0; i < spec.n(); ++i) {
        double others_sum = x.total() - x[i];
        double others_max = 0.0;
        for (int j = 0; j < x.size(); ++j)
            if (j != i) others_max = std::max(others_max, x[j]);
        double current = utility_at(x[i], others_sum, others_max, spec.player(i), spec.reward());
        for (int k = 0; k < points; ++k) {
            double xi = k * grid.step;
            if (utility_at(xi, others_sum, others_max, spec.player(i), spec.reward()) >
                current + margin)
                return false;
        }
    }
    return true;
}

}  // namespace nteg
