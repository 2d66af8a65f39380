#pragma once

#include <cmath>
#include <functional>

#include "pmerge/errors.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

using MergeFn = std::function<double(const PVector&)>;

// Zero-one adjusted version of a merging function: 0 as soon as any entry
// is 0, otherwise F(p ^ 1) ^ 1. Turns any p-merging function into its
// admissible normal form on the boundary.
inline double zero_one_adjust(const MergeFn& F, const PVector& p) {
    if (p.min() == 0.0) return 0.0;
    return std::min(F(p.clamped_at_one()), 1.0);
}

// Lower semicontinuous version: lim_{lambda->1-} F(lambda p), sampled at
// lambda = 1 - 2^-s. Diagnostic only; the closed forms in this library are
// already lsc. The sampled sequence must be nondecreasing for increasing F;
// a decrease beyond tolerance reports a non-monotone F. The geometric
// lambda schedule makes one Richardson step exact for locally linear F
// (every homogeneous merge below its clamp).
inline double lsc_version(const MergeFn& F, const PVector& p, int shrink_steps = 30,
                          double tol = 1e-12) {
    double prev = -kInf;
    double last = 0.0, second_last = 0.0;
    for (int s = 1; s <= shrink_steps; ++s) {
        double lambda = 1.0 - std::ldexp(1.0, -s);
        double v = F(p.scaled(lambda));
        if (v < prev - tol * std::max(1.0, std::abs(prev)))
            throw non_monotone_error("lsc_version: F(lambda p) decreased as lambda -> 1");
        second_last = (s == 1) ? v : last;
        last = v;
        prev = v;
    }
    if (std::abs(last - second_last) <= tol) return last;
    return last + (last - second_last);
}

}  // namespace pmerge
