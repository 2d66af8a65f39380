#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pmerge/calibrator.hpp"
#include "pmerge/classic.hpp"
#include "pmerge/coefficients.hpp"
#include "pmerge/errors.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

struct MergeResult {
    double p = 1.0;
    std::string method_tag;
    double accuracy_bound = 0.0;  // 0 for closed forms, 2^-M for binary search
};

struct InducedMerge {
    Calibrator calibrator;
    int K = 0;
    int M = 52;
};

// Rejection membership statistic phi_p(eps) = (1/K) sum f(p_k/eps),
// nondecreasing in eps for decreasing f. Entries beyond eps*support_end
// contribute nothing; the sorted view makes this a prefix.
inline double phi_induced(const Calibrator& f, std::span<const double> sorted_p, double eps) {
    const double cutoff = eps * f.support_end * (1.0 + 1e-12);
    KahanSum s;
    for (double p : sorted_p) {
        if (p > cutoff) break;
        double term = (p == 0.0) ? f.at_zero : f.eval(p / eps);
        if (std::isinf(term)) return kInf;
        s.add(term);
    }
    return s.value() / static_cast<double>(sorted_p.size());
}

// Binary search for the p-merging function induced by a calibrator, to
// accuracy 2^-M. Returns the valid upper end R of the bracket, never the
// midpoint, so the output is itself a valid p-value. A zero input rejects
// outright.
inline MergeResult merge_induced(const PVector& p, const Calibrator& f, int M = 52) {
    if (M < 1) throw range_error("merge_induced: M >= 1 required");
    MergeResult res;
    res.method_tag = "induced:" + f.spec + ":M=" + std::to_string(M);
    res.accuracy_bound = std::ldexp(1.0, -M);
    if (p.min() == 0.0) {
        res.p = 0.0;
        return res;
    }
    double L = 0.0, R = 1.0;
    for (int m = 0; m < M; ++m) {
        double eps = 0.5 * (L + R);
        if (phi_induced(f, p.sorted(), eps) >= 1.0)
            R = eps;
        else
            L = eps;
    }
    res.p = R;
    return res;
}

inline MergeResult merge_induced(const PVector& p, const InducedMerge& im) {
    if (im.K != p.k()) throw range_error("merge_induced: calibrator arity mismatch");
    return merge_induced(p, im.calibrator, im.M);
}

// Shared rejection test of the grid harmonic merger of arity m over an
// index set given as one or two ascending spans:
//   (1/m) sum f_m(p/eps) >= 1  with  f_m(x) = m 1{l_m x <= 1} / ceil(m l_m x).
// Every caller (exact enumeration, Algorithm 1, the discovery engine) must
// go through this helper: rejection sums frequently hit exactly 1 in the
// rationals, so the verdict at the threshold depends on the accumulation
// and has to be bit-identical across paths.
inline bool grid_harmonic_rejects(std::span<const double> a, std::span<const double> b, int m,
                                  double ell_m, double eps) {
    const double mell = m * ell_m;
    const double cutoff = eps / ell_m * (1.0 + 1e-12);
    const double md = m;
    KahanSum acc;
    for (auto span : {a, b}) {
        for (double p : span) {
            if (p > cutoff) break;
            double y = mell * p / eps;
            if (y <= md) acc.add(1.0 / ceil_tol(y));
            if (acc.value() >= 1.0) return true;
        }
    }
    return acc.value() >= 1.0;
}

// Exact grid harmonic merger. The calibrator changes value only on the grid
// i/(K l_K), so the merge value is one of the candidates K l_K p_j / i, and
// acceptance is monotone in eps: binary search over the sorted candidate
// values replaces the full O(K^3) scan.
inline double grid_harmonic_exact(const PVector& p) {
    const int K = p.k();
    const auto s = p.sorted();
    if (s[0] <= 0.0) return 0.0;
    const double ellK = harmonic_number(K);

    std::vector<double> cands;
    cands.reserve(static_cast<std::size_t>(K) * K);
    for (int j = 0; j < K; ++j)
        for (int i = 1; i <= K; ++i) {
            double eps = K * ellK * s[static_cast<std::size_t>(j)] / i;
            if (eps <= 1.0) cands.push_back(eps);
        }
    if (cands.empty()) return 1.0;
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    auto accepted = [&](double eps) {
        return grid_harmonic_rejects(s, {}, K, ellK, eps);
    };

    if (!accepted(cands.back())) return 1.0;
    std::size_t lo = 0, hi = cands.size() - 1;  // hi is known accepted
    if (accepted(cands[lo])) return cands[lo];
    while (lo + 1 < hi) {  // lo rejected, hi accepted
        std::size_t mid = lo + (hi - lo) / 2;
        if (accepted(cands[mid]))
            hi = mid;
        else
            lo = mid;
    }
    return cands[hi];
}

// Closed-form starred power-mean merger F*_{r,K}: running minimum over
// prefix power means of the sorted input against the extremal vector
// (c, d, ..., d). All prefix comparisons happen in the r-th power scale,
//   ratio^r = S_m / (c^r + (m-1) d^r)   with S_m = sum_{k<=m} p_(k)^r,
// so the loop is one power per element plus one division per prefix; a
// single root at the end recovers the value. O(K log K) incl. the sort.
inline double m_star(const PVector& p, double r, const MCoefficients& coef) {
    const int K = p.k();
    if (K < 3) throw range_error("m_star: K >= 3 required");
    if (r >= K - 1.0) throw range_error("m_star: r >= K-1 not defined");
    if (coef.K != K || coef.r != r)
        throw range_error("m_star: coefficients solved for different (r,K)");
    const auto s = p.sorted();
    if (s[0] == 0.0) return 0.0;

    if (r == 0.0) {
        const double lc = (coef.c > 0.0) ? std::log(coef.c) : -745.0;
        const double ld = std::log(coef.d);
        double best = kInf;
        KahanSum logsum;
        for (int m = 1; m <= K; ++m) {
            double x = s[static_cast<std::size_t>(m - 1)];
            logsum.add(x == 1.0 ? 0.0 : std::log(x));
            best = std::min(best, (logsum.value() - lc - (m - 1.0) * ld) / m);
        }
        return std::min(std::exp(best), 1.0);
    }

    const bool lower = r < 1.0 / (K - 1.0);
    const double A = lower ? std::pow(coef.c, r) : 0.0;
    const double B = lower ? std::pow(coef.d, r) : 0.0;
    const double tauK = lower ? 0.0 : r * K / (r + 1.0);
    // ascending order statistics feed the r<0 sums largest-first
    KahanSum sum;
    double best = 0.0;
    bool have = false;
    for (int m = 1; m <= K; ++m) {
        double x = s[static_cast<std::size_t>(m - 1)];
        sum.add(x == 1.0 ? 1.0 : std::pow(x, r));
        double powered;
        if (lower) {
            powered = sum.value() / (A + (m - 1.0) * B);
        } else {
            // M_{r,m}(p_m) <= eps (1 - tau K/m)^{1/r}; ./0 = inf drops the term
            double den = 1.0 - tauK / m;
            if (den <= 0.0) continue;
            powered = sum.value() / (m * den);
        }
        if (!have) {
            best = powered;
            have = true;
        } else if (r < 0.0) {
            best = std::max(best, powered);  // x^{1/r} reverses order for r < 0
        } else {
            best = std::min(best, powered);
        }
    }
    double v;
    if (std::isinf(best))
        v = (r < 0.0) ? 0.0 : kInf;
    else if (best <= 0.0)
        v = 0.0;
    else
        v = std::exp(std::log(best) / r);
    return std::min(v, 1.0);
}

inline double m_star(const PVector& p, double r) {
    return m_star(p, r, solve_m_coefficients(r, p.k()));
}

// Cross-validates the rejection-region identity
//   F*_{r,K}(p) <= eps  <=>  F_{r,K}(p ^ eps d 1) <= eps  or  min(p) = 0.
inline bool m_star_equivalence_check(const PVector& p, double r, double eps,
                                     const MCoefficients& coef) {
    if (!(eps > 0.0 && eps < 1.0)) throw range_error("m_star_equivalence_check: eps in (0,1)");
    bool lhs = m_star(p, r, coef) <= eps;
    bool rhs;
    if (p.min() == 0.0) {
        rhs = true;
    } else {
        std::vector<double> cl(p.values());
        for (double& x : cl) x = std::min(x, eps * coef.d);
        rhs = m_family(PVector::validate(std::move(cl)), r, coef) <= eps;
    }
    return lhs == rhs;
}

// Worst-case ratio gamma_K of the grid harmonic merger to Hommel:
// min{t > 0 : sum_k 1{t >= k/K} / ceil(k/t) >= 1}. The summand is piecewise
// constant between consecutive fractions k/m, so the minimum sits on that
// grid; the sum is nondecreasing in t, so binary search applies.
inline double gamma_K(int K) {
    if (K < 2) throw range_error("gamma_K: K >= 2 required");
    std::vector<double> cand;
    cand.reserve(static_cast<std::size_t>(K) * (K + 1) / 2);
    for (int m = 1; m <= K; ++m)
        for (int k = 1; k <= m; ++k) cand.push_back(static_cast<double>(k) / m);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    auto big_enough = [K](double t) {
        long double acc = 0.0L;
        for (int k = 1; k <= K; ++k) {
            // 1{t >= k/K} via cross multiplication; a whisker of slack keeps
            // exact rational boundaries like t = k/K on the closed side
            if (t * K < k * (1.0 - 4e-16)) break;
            acc += 1.0L / static_cast<long double>(ceil_tol(k / t));
        }
        return acc >= 1.0L - 1e-15L;
    };

    std::size_t lo = 0, hi = cand.size() - 1;
    if (!big_enough(cand[hi]))
        throw convergence_error("gamma_K: no candidate accepted (bug)");
    if (big_enough(cand[0])) return cand[0];
    while (lo + 1 < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (big_enough(cand[mid]))
            hi = mid;
        else
            lo = mid;
    }
    if (!big_enough(cand[hi]) || big_enough(cand[lo]))
        throw convergence_error("gamma_K: acceptance not monotone (bug)");
    return cand[hi];
}

/// Greatest-improvement ratio of harmonic* over harmonic: 1-(K-1)c_{-1}.
inline double improvement_ratio_mstar(int K) {
    if (K < 3) throw range_error("improvement_ratio_mstar: K >= 3 required");
    const MCoefficients& c = solve_m_coefficients(-1.0, K);
    return 1.0 - (K - 1.0) * c.c;
}

}  // namespace pmerge
