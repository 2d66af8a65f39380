#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmerge/classic.hpp"
#include "pmerge/coefficients.hpp"
#include "pmerge/errors.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

enum class Convexity { strictly_convex, strictly_concave, piecewise_constant, other };

inline std::string to_string(Convexity c) {
    switch (c) {
        case Convexity::strictly_convex: return "strictly_convex";
        case Convexity::strictly_concave: return "strictly_concave";
        case Convexity::piecewise_constant: return "piecewise_constant";
        default: return "other";
    }
}

// p-to-e calibrator: decreasing on [0,inf), zero above 1, integral over
// [0,1] at most 1. Closed-form piecewise-analytic evaluator plus metadata;
// exactness at breakpoints like k/(K l_K) matters for the induced mergers.
struct Calibrator {
    std::function<double(double)> eval;  // defined for x > 0
    double at_zero = kInf;
    std::optional<double> eta;           // plateau length where f == K
    Convexity convexity = Convexity::other;
    double support_end = 1.0;            // f == 0 strictly beyond this
    std::vector<double> breakpoints;     // interior quadrature split points
    bool admissible = false;
    double integral_on_unit = 0.0;
    std::string spec;

    double operator()(double x) const { return x == 0.0 ? at_zero : eval(x); }
};

// Adaptive composite Simpson over [0,1], split at the calibrator's declared
// breakpoints. Piece endpoints are nudged inward so discontinuities are read
// as one-sided limits.
namespace detail {

inline double simpson_adapt(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double integrate_piecewise(const std::function<double(double)>& f,
                                  std::vector<double> splits, double lo = 0.0,
                                  double hi = 1.0, double tol = 1e-10) {
    splits.push_back(lo);
    splits.push_back(hi);
    std::sort(splits.begin(), splits.end());
    splits.erase(std::unique(splits.begin(), splits.end()), splits.end());
    KahanSum total;
    for (std::size_t i = 0; i + 1 < splits.size(); ++i) {
        double a = splits[i], b = splits[i + 1];
        if (b <= lo || a >= hi || b - a <= 0.0) continue;
        double nudge = (b - a) * 1e-13;
        auto g = [&](double x) { return f(std::min(std::max(x, a + nudge), b - nudge)); };
        double fa = g(a), fm = g(0.5 * (a + b)), fb = g(b);
        double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total.add(detail::simpson_adapt(g, a, b, fa, fm, fb, whole,
                                        tol / static_cast<double>(splits.size()), 40));
    }
    return total.value();
}

inline double calibrator_integral(const Calibrator& f, double lo = 0.0, double hi = 1.0,
                                  double tol = 1e-10) {
    return integrate_piecewise(f.eval, f.breakpoints, lo, hi, tol);
}

// Grid harmonic calibrator x -> K 1{l_K x <= 1} / ceil(K l_K x).
inline Calibrator grid_harmonic_calibrator(int K) {
    if (K < 2) throw range_error("grid_harmonic_calibrator: K >= 2 required");
    const double ell = harmonic_number(K);
    const double Kd = K;
    Calibrator f;
    f.eval = [Kd, ell](double x) {
        if (x <= 0.0) return kInf;
        double y = Kd * ell * x;
        if (y > Kd) return 0.0;  // l_K x > 1
        return Kd / ceil_tol(y);
    };
    f.at_zero = kInf;
    f.eta = 1.0 / (Kd * ell);
    f.convexity = Convexity::piecewise_constant;
    f.support_end = 1.0 / ell;
    f.breakpoints.reserve(K);
    for (int i = 1; i <= K; ++i) f.breakpoints.push_back(i / (Kd * ell));
    f.admissible = true;
    f.spec = "grid-harmonic";
    f.integral_on_unit = calibrator_integral(f);
    return f;
}

// Order-statistic calibrator (K/k) 1_(0, k/K]. Inadmissible as a calibrator
// for k >= 2; its value at 0 is pinned to K, the least value that keeps the
// induced merge rejecting on a zero входной p-value.
inline Calibrator o_family_calibrator(int k, int K) {
    if (K < 2 || k < 1 || k > K) throw range_error("o_family_calibrator: need 1 <= k <= K");
    Calibrator f;
    const double val = static_cast<double>(K) / k;
    const double cut = static_cast<double>(k) / K;
    f.eval = [val, cut, K](double x) {
        if (x <= 0.0) return static_cast<double>(K);
        return x <= cut ? val : 0.0;
    };
    f.at_zero = (k == 1) ? kInf : static_cast<double>(K);
    f.eta = (k == 1) ? std::optional<double>(cut) : std::optional<double>(0.0);
    f.convexity = Convexity::piecewise_constant;
    f.support_end = cut;
    f.breakpoints = {cut};
    f.admissible = (k == 1);
    f.spec = "o:k=" + std::to_string(k);
    f.integral_on_unit = calibrator_integral(f);
    return f;
}

// Calibrator of the starred power-mean merger. Three analytic branches:
// ratio form for r < 1/(K-1) (r != 0), log form for r = 0, and the
// plateau-free (r+1)/r (1 - x^r)_+ form for r in [1/(K-1), K-1).
inline Calibrator mstar_calibrator(double r, int K, const MCoefficients& coef) {
    if (K < 3) throw range_error("mstar_calibrator: K >= 3 required");
    if (r >= K - 1.0) throw range_error("mstar_calibrator: r >= K-1 has no calibrator");
    if (coef.K != K || coef.r != r)
        throw range_error("mstar_calibrator: coefficients solved for different (r,K)");
    Calibrator f;
    const double Kd = K;
    if (r < 1.0 / (K - 1.0)) {
        const double c = coef.c, d = coef.d;
        const double lc = (c > 0.0) ? std::log(c) : -745.0;
        const double ld = std::log(d);
        if (r != 0.0) {
            const double denom = std::expm1(r * (lc - ld));  // (c/d)^r - 1
            f.eval = [Kd, c, d, ld, denom, r](double x) {
                if (x <= 0.0) return kInf;
                if (x <= c) return Kd;
                if (x >= d) return 0.0;
                return Kd * std::expm1(r * (std::log(x) - ld)) / denom;
            };
        } else {
            f.eval = [Kd, c, d, lc, ld](double x) {
                if (x <= 0.0) return kInf;
                if (x <= c) return Kd;
                if (x >= d) return 0.0;
                return Kd * (std::log(x) - ld) / (lc - ld);
            };
        }
        f.eta = c;
        f.support_end = d;
        f.breakpoints = {c, d};
        f.convexity = Convexity::strictly_convex;
    } else {
        const double coefr = (r + 1.0) / r;
        f.eval = [coefr, r](double x) {
            if (x <= 0.0) return kInf;
            if (x >= 1.0) return 0.0;
            return coefr * -std::expm1(r * std::log(x));
        };
        f.eta = 0.0;
        f.support_end = 1.0;
        f.breakpoints = {};
        f.convexity = (r < 1.0)   ? Convexity::strictly_convex
                      : (r > 1.0) ? Convexity::strictly_concave
                                  : Convexity::other;
    }
    f.at_zero = kInf;
    f.admissible = (r != 1.0);
    f.spec = "mstar:r=" + std::to_string(r);
    f.integral_on_unit = calibrator_integral(f);
    return f;
}

inline Calibrator mstar_calibrator(double r, int K) {
    return mstar_calibrator(r, K, solve_m_coefficients(r, K));
}

// Plateau transform: g = f((x-eta)/(1-K eta)) on (eta, 1-(K-1)eta], K on
// [0, eta]. Maps a calibrator to a calibrator and preserves admissibility
// of the induced merger.
inline Calibrator eta_transform(const Calibrator& f, double eta, int K) {
    if (eta < 0.0 || eta > 1.0 / K) throw range_error("eta_transform: eta must be in [0, 1/K]");
    if (eta == 0.0) return f;
    Calibrator g;
    const double scale = 1.0 - K * eta;
    const double tau = 1.0 - (K - 1.0) * eta;
    const double Kd = K;
    auto inner = f.eval;
    g.eval = [inner, eta, scale, tau, Kd](double x) {
        if (x <= 0.0) return Kd;
        if (x <= eta) return Kd;
        if (x > tau) return 0.0;
        if (scale <= 0.0) return 0.0;  // eta == 1/K: pure plateau (Bonferroni)
        return inner((x - eta) / scale);
    };
    g.at_zero = Kd;
    g.eta = eta;
    g.convexity = f.convexity;
    g.support_end = (scale <= 0.0) ? eta : std::min(tau, eta + f.support_end * scale);
    g.breakpoints = {eta, tau};
    for (double b : f.breakpoints) {
        double m = eta + b * scale;
        if (m > 0.0 && m < 1.0) g.breakpoints.push_back(m);
    }
    g.admissible = false;  // g(0) finite; merged behaviour unchanged for f(0) >= K
    g.spec = f.spec + ":eta=" + std::to_string(eta);
    g.integral_on_unit = calibrator_integral(g);
    return g;
}

struct AdmissibilityReport {
    bool satisfied = false;
    double eta = 0.0;
    std::vector<std::string> witnesses;
};

// Checks the sufficient condition for the induced merger to be admissible:
// f = K on (0,eta], f(eta+) in (K/(K-1), K], strictly convex or concave on
// (eta, tau], f(1) = 0. Declared convexity metadata decides the branch;
// second differences on a 512-point grid cross-validate it.
inline AdmissibilityReport check_admissibility_condition(const Calibrator& f, int K) {
    AdmissibilityReport rep;
    const double eta = f.eta.value_or(0.0);
    rep.eta = eta;
    const double tau = 1.0 - (K - 1.0) * eta;

    if (!(eta >= 0.0 && eta < 1.0 / K)) {
        rep.witnesses.push_back("eta outside [0, 1/K)");
        return rep;
    }
    if (eta > 0.0) {
        for (int i = 1; i <= 64; ++i) {
            double x = eta * i / 64.0;
            if (std::abs(f(x) - K) > 1e-9 * K) {
                rep.witnesses.push_back("f != K on (0,eta] at x=" + std::to_string(x));
                break;
            }
        }
    }
    double fplus = f(eta + std::max(1e-12, eta * 1e-9));
    if (!(fplus > static_cast<double>(K) / (K - 1) && fplus <= K * (1.0 + 1e-9)))
        rep.witnesses.push_back("f(eta+) = " + std::to_string(fplus) +
                                " outside (K/(K-1), K]");
    if (std::abs(f(1.0)) > 1e-12) rep.witnesses.push_back("f(1) != 0");

    if (f.convexity != Convexity::strictly_convex &&
        f.convexity != Convexity::strictly_concave) {
        rep.witnesses.push_back("not strictly convex or strictly concave (declared " +
                                to_string(f.convexity) + ")");
    } else {
        const int n = 512;
        const double sign = (f.convexity == Convexity::strictly_convex) ? 1.0 : -1.0;
        // keep clear of the plateau edge and the support end
        double lo = eta + (tau - eta) * 1e-6;
        double h = (tau - lo) / (n + 1);
        int bad = 0;
        for (int i = 1; i <= n; ++i) {
            double x = lo + i * h;
            double d2 = f(x - h) - 2.0 * f(x) + f(x + h);
            if (sign * d2 < -1e-9) ++bad;
        }
        if (bad > 0)
            rep.witnesses.push_back("second differences contradict declared convexity at " +
                                    std::to_string(bad) + " grid points");
    }
    rep.satisfied = rep.witnesses.empty();
    return rep;
}

// Simplex weights.
struct WeightVector {
    static WeightVector validate(std::vector<double> lambdas) {
        KahanSum s;
        for (double l : lambdas) {
            if (!(l >= 0.0)) throw value_error("weights must be nonnegative");
            s.add(l);
        }
        if (std::abs(s.value() - 1.0) > 1e-12)
            throw value_error("weights must sum to 1 within 1e-12");
        WeightVector w;
        w.lambdas = std::move(lambdas);
        return w;
    }
    static WeightVector uniform(int K) {
        return validate(std::vector<double>(static_cast<std::size_t>(K), 1.0 / K));
    }
    std::vector<double> lambdas;
};

// Weighted p-to-e merge: sum lambda_k f_k(p_k), saturating at +inf.
inline double p_to_e_merge(const PVector& p, const std::vector<Calibrator>& fs,
                           const WeightVector& w) {
    if (fs.size() != static_cast<std::size_t>(p.k()) || w.lambdas.size() != fs.size())
        throw range_error("p_to_e_merge: length mismatch");
    KahanSum s;
    for (int k = 0; k < p.k(); ++k) {
        double lk = w.lambdas[static_cast<std::size_t>(k)];
        if (lk == 0.0) continue;  // 0 * inf := 0
        double e = fs[static_cast<std::size_t>(k)](p.values()[static_cast<std::size_t>(k)]);
        if (std::isinf(e)) return kInf;
        s.add(lk * e);
    }
    return s.value();
}

// Detour through e-values and back: 1 / (weighted e-merge), capped at 1.
// Never smaller than the induced p-merging function; kept as a baseline.
inline double naive_detour_merge(const PVector& p, const std::vector<Calibrator>& fs,
                                 const WeightVector& w) {
    double e = p_to_e_merge(p, fs, w);
    if (std::isinf(e)) return 0.0;
    if (e <= 1.0) return 1.0;
    return 1.0 / e;
}

}  // namespace pmerge
