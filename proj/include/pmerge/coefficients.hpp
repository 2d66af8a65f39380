#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "pmerge/errors.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

// Solved constants of the precise power-mean merger b_rK * M_{r,K} ^ 1.
// Always 0 <= c_r < 1/K < d_r <= 1, with c_r = 0 exactly for r >= 1/(K-1).
// residual is the dimensionless defect of the branch equation at c_r.
struct MCoefficients {
    double r = 0.0;
    int K = 0;
    double c = 0.0;
    double d = 1.0;
    double b = 1.0;
    double residual = 0.0;
};

namespace detail {

inline double log_d_of(double c, int K) { return std::log1p(-(K - 1.0) * c); }

// Scale-free defect of the general-r root equation, in t = log c.
// A = c^r + (K-1) d^r equals B = K * Int_c^d x^r dx / (1-Kc) at the root;
// both strictly positive on (0, 1/K), so log A - log B is a clean residual.
inline double resid_general(double t, double r, int K) {
    double c = std::exp(t);
    double ld = log_d_of(c, K);
    double logA = log_add_exp(r * t, std::log(K - 1.0) + r * ld);
    double s = r + 1.0;
    double logI;  // log of (d^{r+1} - c^{r+1})/(r+1) = Int_c^d x^r dx
    if (s > 0.0)
        logI = s * ld + std::log1p(-std::exp(s * (t - ld))) - std::log(s);
    else
        logI = s * t + std::log1p(-std::exp(-s * (t - ld))) - std::log(-s);
    double logB = std::log(static_cast<double>(K)) + logI - std::log1p(-K * c);
    return logA - logB;
}

inline double resid_minus_one(double t, int K) {
    double c = std::exp(t);
    if (c == 0.0) return 1.0;
    double d = 1.0 - (K - 1.0) * c;
    double lhs = (1.0 - K * c) / (K * c * d);
    if (!std::isfinite(lhs)) return 1.0;
    double rhs = log_d_of(c, K) - t;  // log(d/c) = log(1/c - (K-1))
    return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

inline double resid_zero(double t, int K) {
    double c = std::exp(t);
    double lhs = K * (1.0 - K * c);
    double rhs = log_d_of(c, K) - t;
    return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

inline double branch_residual(double t, double r, int K) {
    if (std::abs(r + 1.0) <= 1e-9) return resid_minus_one(t, K);
    if (std::abs(r) <= 1e-9) return resid_zero(t, K);
    return resid_general(t, r, K);
}

// log M_{r,K}(c, d, ..., d) with K-1 copies of d.
inline double log_mean_cd(double r, int K, double c, double d) {
    if (std::abs(r) <= 1e-9) {
        double lc = (c > 0.0) ? std::log(c) : -745.0;
        return (lc + (K - 1.0) * std::log(d)) / K;
    }
    if (c == 0.0) {
        // only reachable for r > 0
        return (std::log(K - 1.0) + r * std::log(d) - std::log(static_cast<double>(K))) / r;
    }
    double u = std::log(d / c);
    return std::log(c) + (std::log1p((K - 1.0) * std::exp(r * u)) - std::log(static_cast<double>(K))) / r;
}

inline MCoefficients solve_m_coefficients_uncached(double r, int K) {
    if (K < 2) throw range_error("solve_m_coefficients: K must be >= 2");
    MCoefficients out;
    out.r = r;
    out.K = K;

    if (std::isinf(r)) {
        out.b = (r > 0) ? 1.0 : static_cast<double>(K);
        out.c = 0.0;
        out.d = 1.0;
        return out;
    }
    if (K == 2) {
        if (r < 1.0) {
            // K=2 degenerates: the extremal vector is (1/2, 1/2), so the
            // strict c < 1/K bound is attained rather than satisfied.
            out.c = 0.5;
            out.d = 0.5;
            out.b = 2.0;
        } else {
            out.c = 0.0;
            out.d = 1.0;
            out.b = std::pow(std::min(r + 1.0, 2.0), 1.0 / r);
        }
        return out;
    }
    if (r >= 1.0 / (K - 1.0)) {
        out.c = 0.0;
        out.d = 1.0;
        out.b = std::pow(std::min(r + 1.0, static_cast<double>(K)), 1.0 / r);
        return out;
    }

    // Root branch: bisection on t = log c. The upper endpoint c = 1/K is a
    // removable zero of the equation, so stop short of it; the lower end
    // adapts because c_0 ~ e^{-K} can sit far below any fixed bracket.
    double t_hi = std::log((1.0 - 1e-6) / K);
    double t_lo = -(K + 60.0);
    double f_hi = branch_residual(t_hi, r, K);
    double f_lo = branch_residual(t_lo, r, K);
    while ((f_lo < 0.0) == (f_hi < 0.0) && t_lo > -740.0) {
        t_lo = std::max(2.0 * t_lo, -740.0);
        f_lo = branch_residual(t_lo, r, K);
    }
    if ((f_lo < 0.0) == (f_hi < 0.0)) {
        if (r > 0.0) {
            // Root underflows; c = 0 joins continuously onto the closed form.
            out.c = 0.0;
            out.d = 1.0;
            out.b = std::exp(-log_mean_cd(r, K, 0.0, 1.0));
            return out;
        }
        throw convergence_error("solve_m_coefficients: failed to bracket root for r=" +
                                std::to_string(r) + " K=" + std::to_string(K));
    }
    double lo = t_lo, hi = t_hi, flo = f_lo;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double fm = branch_residual(mid, r, K);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double t = 0.5 * (lo + hi);
    out.c = std::exp(t);
    out.d = 1.0 - (K - 1.0) * out.c;
    out.residual = branch_residual(t, r, K);
    out.b = std::exp(-log_mean_cd(r, K, out.c, out.d));
    return out;
}

struct CoeffKey {
    double r;
    int K;
    bool operator<(const CoeffKey& o) const {
        if (r != o.r) return r < o.r;
        return K < o.K;
    }
};

}  // namespace detail

// Process-wide memo; insertion is idempotent so concurrent solves agree.
inline const MCoefficients& solve_m_coefficients(double r, int K) {
    static std::map<detail::CoeffKey, MCoefficients> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.try_emplace(detail::CoeffKey{r, K});
    if (inserted) {
        try {
            it->second = detail::solve_m_coefficients_uncached(r, K);
        } catch (...) {
            cache.erase(it);
            throw;
        }
    }
    return it->second;
}

// Raw branch-equation residual at a caller-supplied c (test oracle hook).
inline double m_coefficient_residual(double c, double r, int K) {
    return detail::branch_residual(std::log(c), r, K);
}

}  // namespace pmerge
