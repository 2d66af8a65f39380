#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "pmerge/coefficients.hpp"
#include "pmerge/errors.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

inline double harmonic_number(int K) {
    KahanSum s;
    for (int k = K; k >= 1; --k) s.add(1.0 / k);
    return s.value();
}

// Power mean M_{r,K}. Limits: r=0 geometric, r=-inf min, r=+inf max.
// For r<0 a zero entry gives 0. Accumulation runs in log space with the
// largest term factored out, so p^r spanning hundreds of decades is safe;
// entries equal to 1 are folded in exactly.
inline double power_mean(std::span<const double> vals, double r) {
    const std::size_t n = vals.size();
    if (n == 0) throw range_error("power_mean: empty input");
    if (std::isinf(r)) {
        double m = vals[0];
        for (double v : vals) m = (r > 0) ? std::max(m, v) : std::min(m, v);
        return m;
    }
    if (r == 0.0) {
        KahanSum ls;
        for (double v : vals) {
            if (v == 0.0) return 0.0;
            ls.add(std::log(v));
        }
        return std::exp(ls.value() / static_cast<double>(n));
    }
    std::size_t ones = 0;
    double max_l = -kInf;
    for (double v : vals) {
        if (v == 1.0) {
            ++ones;
            continue;
        }
        if (v == 0.0) {
            if (r < 0) return 0.0;
            continue;  // 0^r = 0 for r > 0
        }
        max_l = std::max(max_l, r * std::log(v));
    }
    if (ones > 0) max_l = std::max(max_l, 0.0);
    if (max_l == -kInf) return 0.0;  // all entries zero, r > 0
    KahanSum s;
    for (double v : vals) {
        if (v == 1.0)
            s.add(std::exp(-max_l));
        else if (v > 0.0)
            s.add(std::exp(r * std::log(v) - max_l));
    }
    double log_mean = (max_l + std::log(s.value()) - std::log(static_cast<double>(n))) / r;
    return std::exp(log_mean);
}

inline double power_mean(const PVector& p, double r) {
    // ascending order statistics put the dominant r<0 terms first
    return power_mean(p.sorted(), r);
}

inline double bonferroni(const PVector& p) {
    return std::min(p.k() * p.min(), 1.0);
}

/// k-th Rueger order-statistic merger (K/k) p_(k) ^ 1.
inline double o_family(const PVector& p, int k) {
    if (k < 1 || k > p.k())
        throw range_error("o_family: k=" + std::to_string(k) + " outside 1.." +
                          std::to_string(p.k()));
    return std::min(static_cast<double>(p.k()) / k * p.order_stat(k), 1.0);
}

// Simes benchmark. NOT universally valid under arbitrary dependence; it is
// the pointwise minimum of all symmetric p-merging functions and serves as
// the unattainable lower bound in comparisons.
inline double simes(const PVector& p) {
    double best = kInf;
    const auto s = p.sorted();
    const double K = p.k();
    for (int k = 1; k <= p.k(); ++k) best = std::min(best, K / k * s[k - 1]);
    return std::min(best, 1.0);
}

inline double hommel(const PVector& p) {
    double best = kInf;
    const auto s = p.sorted();
    const double K = p.k();
    for (int k = 1; k <= p.k(); ++k) best = std::min(best, K / k * s[k - 1]);
    return std::min(harmonic_number(p.k()) * best, 1.0);
}

inline double m_family(const PVector& p, double r, const MCoefficients& coef) {
    if (coef.K != p.k() || (coef.r != r && !(std::isnan(coef.r) && std::isnan(r))))
        throw range_error("m_family: coefficients solved for different (r,K)");
    return std::min(coef.b * power_mean(p, r), 1.0);
}

inline double m_family(const PVector& p, double r) {
    return m_family(p, r, solve_m_coefficients(r, p.k()));
}

}  // namespace pmerge
