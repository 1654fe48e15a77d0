#pragma once

#include <algorithm>
#include <cmath>

namespace nteg {

/// Scale used by relative comparisons: max(1, |a|, |b|).
inline double cmp_scale(double a, double b) {
    return std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// |a - b| <= tol, relative to cmp_scale.
inline bool close(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * cmp_scale(a, b);
}

/// a <= b up to relative tolerance (closed comparison).
inline bool leq(double a, double b, double tol) {
    return a <= b + tol * cmp_scale(a, b);
}

/// a < b by more than the relative tolerance (strict comparison).
inline bool lt(double a, double b, double tol) {
    return a < b - tol * cmp_scale(a, b);
}

/// Closed interval [lo, hi]; hi < lo means empty.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x, double tol) const { return leq(lo, x, tol) && leq(x, hi, tol); }
    bool contains_strict(double x, double tol) const { return lt(lo, x, tol) && lt(x, hi, tol); }
    bool empty() const { return hi < lo; }
};

}  // namespace nteg
