#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pmerge/method.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

// Lower-triangular corner of the true-discovery matrix. dm[l][j] is a valid
// p-value for "fewer than j true discoveries among the l smallest p-values";
// rows are nondecreasing in j by the running-max correction.
struct DiscoveryMatrix {
    int corner = 0;
    int K = 0;
    std::string method_tag;
    std::vector<double> alphas{0.01, 0.05};
    std::vector<double> cells;  // row-major lower triangle

    static std::size_t index(int l, int j) {
        return static_cast<std::size_t>(l) * (l - 1) / 2 + static_cast<std::size_t>(j) - 1;
    }
    double at(int l, int j) const { return cells[index(l, j)]; }
};

namespace dm_detail {

// DM'_{l,j} = max over suffix starts i in {l+1, ..., K+1} of
// F_p({j..l} u {i..K}); engines evaluate that maximum incrementally.
// cell() must be reentrant: rows run in parallel.
class Engine {
 public:
    explicit Engine(std::span<const double> sorted) : s_(sorted), K_(static_cast<int>(sorted.size())) {}
    virtual ~Engine() = default;
    virtual double cell(int l, int j) const = 0;

 protected:
    double sv(int pos1) const { return s_[static_cast<std::size_t>(pos1 - 1)]; }  // 1-based
    std::span<const double> s_;
    int K_;
};

// F_m = m min ^ 1 is increasing in the set size, so the full suffix wins.
class BonferroniEngine final : public Engine {
 public:
    using Engine::Engine;
    double cell(int l, int j) const override {
        (void)l;
        return std::min((K_ - j + 1.0) * sv(j), 1.0);
    }
};

// Simes and Hommel. The suffix contribution min_u p_u / (u + x) at shift
// x = c+1-i is the reciprocal upper envelope of lines (u + x)/p_u with
// slopes 1/p_u; suffix elements arrive in nondecreasing slope order while
// the queries x increase, so a monotone hull gives O(1) amortized steps.
class SimesHommelEngine final : public Engine {
 public:
    SimesHommelEngine(std::span<const double> sorted, bool hommel)
        : Engine(sorted), hommel_(hommel), ell_(static_cast<std::size_t>(K_) + 1, 0.0) {
        for (int m = 1; m <= K_; ++m)
            ell_[static_cast<std::size_t>(m)] = ell_[static_cast<std::size_t>(m - 1)] + 1.0 / m;
    }

    double cell(int l, int j) const override {
        if (sv(j) == 0.0) return 0.0;
        const int c = l - j + 1;
        double min_core = kInf;
        for (int k = 1; k <= c; ++k) min_core = std::min(min_core, sv(j + k - 1) / k);

        auto value = [&](int m, double ratio) {
            double v = m * ratio;
            if (hommel_) v *= ell_[static_cast<std::size_t>(m)];
            return std::min(v, 1.0);
        };

        double best = value(c, min_core);  // empty suffix, i = K+1
        Hull hull;
        for (int i = K_; i >= l + 1; --i) {
            double pu = sv(i);
            hull.add(1.0 / pu, i / pu);
            double x = c + 1.0 - i;
            double ratio = std::min(min_core, 1.0 / hull.query(x));
            best = std::max(best, value(c + (K_ - i + 1), ratio));
        }
        return best;
    }

 private:
    struct Hull {
        std::vector<double> A, B;  // y = A s + B, max envelope
        std::size_t ptr = 0;

        void add(double a, double b) {
            if (!A.empty() && a == A.back()) {
                if (b <= B.back()) return;
                A.pop_back();
                B.pop_back();
            }
            while (A.size() >= 2) {
                std::size_t n = A.size();
                // middle line never on top: crossover order check
                if ((B[n - 1] - b) * (A[n - 1] - A[n - 2]) <=
                    (B[n - 2] - B[n - 1]) * (a - A[n - 1])) {
                    A.pop_back();
                    B.pop_back();
                } else {
                    break;
                }
            }
            A.push_back(a);
            B.push_back(b);
            if (ptr >= A.size()) ptr = A.size() - 1;
        }
        double query(double s) {
            while (ptr + 1 < A.size() &&
                   A[ptr + 1] * s + B[ptr + 1] >= A[ptr] * s + B[ptr])
                ++ptr;
            return A[ptr] * s + B[ptr];
        }
    };

    bool hommel_;
    std::vector<double> ell_;
};

// Order-statistic family (m/k) q_(k) ^ 1: the k-th smallest of the set is
// either a core element or sits at a fixed offset into the suffix.
class OFamilyEngine final : public Engine {
 public:
    OFamilyEngine(std::span<const double> sorted, int k, bool star)
        : Engine(sorted), k_(k), star_(star) {}

    double cell(int l, int j) const override {
        const int c = l - j + 1;
        if (star_ && sv(j) == 0.0) return 0.0;
        double best = 0.0;
        for (int i = K_ + 1; i >= l + 1; --i) {
            int m = c + (K_ - i + 1);
            if (m == 1) {  // identity at arity 1
                best = std::max(best, std::min(sv(j), 1.0));
                continue;
            }
            if (k_ > m)
                throw arity_error("o-family with k=" + std::to_string(k_) +
                                  " undefined at arity " + std::to_string(m));
            double qk = (k_ <= c) ? sv(j + k_ - 1) : sv(i + (k_ - c) - 1);
            best = std::max(best, std::min(static_cast<double>(m) / k_ * std::min(qk, 1.0), 1.0));
        }
        return best;
    }

 private:
    int k_;
    bool star_;
};

// Power-mean family with per-arity constants. Backward suffix power sums
// make each suffix extension O(1); core sums are re-accumulated per cell so
// no large-term cancellation occurs.
class MFamilyEngine final : public Engine {
 public:
    MFamilyEngine(std::span<const double> sorted, double r) : Engine(sorted), r_(r) {
        ss_.resize(static_cast<std::size_t>(K_) + 2, 0.0);
        for (int u = K_; u >= 1; --u)
            ss_[static_cast<std::size_t>(u)] = ss_[static_cast<std::size_t>(u) + 1] + term(sv(u));
        b_.resize(static_cast<std::size_t>(K_) + 1, 1.0);
        for (int m = 2; m <= K_; ++m) b_[static_cast<std::size_t>(m)] = solve_m_coefficients(r, m).b;
    }

    double cell(int l, int j) const override {
        const int c = l - j + 1;
        KahanSum core;
        for (int u = j; u <= l; ++u) core.add(term(sv(u)));
        double best = 0.0;
        for (int i = K_ + 1; i >= l + 1; --i) {
            int m = c + (K_ - i + 1);
            double S = core.value() + ss_[static_cast<std::size_t>(i)];
            best = std::max(best, family_value(m, S));
        }
        return std::min(best, 1.0);
    }

 private:
    double term(double p) const {
        if (r_ == 0.0) return (p == 0.0) ? -kInf : std::log(p);
        if (p == 0.0) return (r_ < 0.0) ? kInf : 0.0;
        return std::pow(p, r_);
    }

    double family_value(int m, double S) const {
        if (m == 1) return std::min(S_inverse(S), 1.0);
        double b = b_[static_cast<std::size_t>(m)];
        if (r_ == 0.0) {
            if (S == -kInf) return 0.0;
            return std::min(b * std::exp(S / m), 1.0);
        }
        if (std::isinf(S)) return (r_ < 0.0) ? 0.0 : 1.0;
        if (S == 0.0 && r_ > 0.0) return 0.0;
        return std::min(b * std::exp((std::log(S) - std::log(static_cast<double>(m))) / r_), 1.0);
    }

    double S_inverse(double S) const {
        // recover p from a single-term statistic
        if (r_ == 0.0) return std::exp(S);
        if (std::isinf(S)) return (r_ < 0.0) ? 0.0 : 1.0;
        if (S == 0.0 && r_ > 0.0) return 0.0;
        return std::exp(std::log(S) / r_);
    }

    double r_;
    std::vector<double> ss_;
    std::vector<double> b_;
};

// Starred power-mean family. In the r-th power the prefix statistic of the
// starred merger is S_mm / (c_m^r + (mm-1) d_m^r), so the inner minimum is
// division-only; one pow at the end of each cell recovers the value.
class MStarEngine final : public Engine {
 public:
    MStarEngine(std::span<const double> sorted, double r) : Engine(sorted), r_(r) {
        if (std::isinf(r)) throw arity_error("m-star family undefined for infinite r");
        if (K_ >= 3 && r >= 2.0)
            throw arity_error("m-star family lacks arity-3 definition for r >= 2");
        ss_.resize(static_cast<std::size_t>(K_) + 2, 0.0);
        for (int u = K_; u >= 1; --u)
            ss_[static_cast<std::size_t>(u)] = ss_[static_cast<std::size_t>(u) + 1] + term(sv(u));
        A_.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        B_.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        lc_.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        ld_.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        upper_.resize(static_cast<std::size_t>(K_) + 1, 0);
        for (int m = 2; m <= K_; ++m) {
            const MCoefficients& co = solve_m_coefficients(r, m);
            upper_[static_cast<std::size_t>(m)] = (m >= 3 && r >= 1.0 / (m - 1.0)) ? 1 : 0;
            if (r_ == 0.0) {
                lc_[static_cast<std::size_t>(m)] = (co.c > 0) ? std::log(co.c) : -745.0;
                ld_[static_cast<std::size_t>(m)] = std::log(co.d);
            } else {
                A_[static_cast<std::size_t>(m)] = std::pow(co.c, r);
                B_[static_cast<std::size_t>(m)] = std::pow(co.d, r);
            }
        }
    }

    double cell(int l, int j) const override {
        if (sv(j) == 0.0) return 0.0;
        const int c = l - j + 1;
        // core prefix statistics
        std::vector<double> cs(static_cast<std::size_t>(c) + 1, 0.0);
        {
            KahanSum acc;
            for (int k = 1; k <= c; ++k) {
                acc.add(term(sv(j + k - 1)));
                cs[static_cast<std::size_t>(k)] = acc.value();
            }
        }
        // opt_i of the per-arity inner opt, all inside the r-th power scale
        bool have = false;
        double outer = 0.0;
        for (int i = K_ + 1; i >= l + 1; --i) {
            int m = c + (K_ - i + 1);
            double inner = inner_opt(m, c, cs, i);
            if (!have) {
                outer = inner;
                have = true;
            } else if (r_ < 0.0) {
                outer = std::min(outer, inner);  // x^{1/r} reverses for r < 0
            } else {
                outer = std::max(outer, inner);
            }
        }
        double v = unpow(outer);
        return std::min(v, 1.0);
    }

 private:
    double term(double p) const {
        if (r_ == 0.0) return (p == 0.0) ? -kInf : std::log(p);
        if (p == 0.0) return (r_ < 0.0) ? kInf : 0.0;
        return std::pow(p, r_);
    }

    // opt over prefix sizes mm of the powered ratio for family arity m.
    double inner_opt(int m, int c, const std::vector<double>& cs, int i) const {
        auto S_of = [&](int mm) {
            if (mm <= c) return cs[static_cast<std::size_t>(mm)];
            return cs[static_cast<std::size_t>(c)] + (ss_[static_cast<std::size_t>(i)] -
                                                      ss_[static_cast<std::size_t>(i + mm - c)]);
        };
        if (m == 1) return S_of(1);  // identity family at arity 1
        if (m == 2) {
            // arity-2 starred family degenerates to zero-adjusted Bonferroni
            if (r_ == 0.0) return S_of(1) + 0.6931471805599453;  // log(2 p_(1))
            return S_of(1) * std::pow(2.0, r_);                  // (2 p_(1))^r
        }
        if (r_ == 0.0) {
            // log scale: min over mm of (L_mm - log c_m - (mm-1) log d_m)/mm
            double best = kInf;
            double lc = lc_[static_cast<std::size_t>(m)], ld = ld_[static_cast<std::size_t>(m)];
            for (int mm = 1; mm <= m; ++mm)
                best = std::min(best, (S_of(mm) - lc - (mm - 1.0) * ld) / mm);
            return best;
        }
        if (upper_[static_cast<std::size_t>(m)]) {
            // r in [1/(m-1), m-1): powered ratio is (S_mm/mm)/(1 - r m/((r+1) mm))_+
            double best = kInf;
            const double tm = r_ * m / (r_ + 1.0);
            for (int mm = 1; mm <= m; ++mm) {
                double den = 1.0 - tm / mm;
                if (den <= 0.0) continue;
                best = std::min(best, (S_of(mm) / mm) / den);
            }
            return best;
        }
        const double A = A_[static_cast<std::size_t>(m)], B = B_[static_cast<std::size_t>(m)];
        double best = 0.0;
        bool first = true;
        for (int mm = 1; mm <= m; ++mm) {
            double ratio_pow = S_of(mm) / (A + (mm - 1.0) * B);
            if (first) {
                best = ratio_pow;
                first = false;
            } else if (r_ < 0.0) {
                best = std::max(best, ratio_pow);  // min ratio = max powered ratio
            } else {
                best = std::min(best, ratio_pow);
            }
        }
        return best;
    }

    double unpow(double x) const {
        if (r_ == 0.0) return std::exp(x);
        if (x == kInf) return (r_ < 0.0) ? 0.0 : kInf;
        if (x <= 0.0) return 0.0;
        return std::exp(std::log(x) / r_);
    }

    double r_;
    std::vector<double> ss_;
    std::vector<double> A_, B_, lc_, ld_;
    std::vector<char> upper_;
};

// Grid harmonic family: binary search per set, bracketed at the running
// maximum so non-improving suffixes cost a single membership test.
class GridHarmonicEngine final : public Engine {
 public:
    explicit GridHarmonicEngine(std::span<const double> sorted) : Engine(sorted) {
        ell_.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        for (int m = 1; m <= K_; ++m)
            ell_[static_cast<std::size_t>(m)] = ell_[static_cast<std::size_t>(m - 1)] + 1.0 / m;
    }

    double cell(int l, int j) const override {
        if (sv(j) == 0.0) return 0.0;
        const int c = l - j + 1;
        double best = 0.0;
        for (int i = l + 1; i <= K_ + 1; ++i) {
            int m = c + (K_ - i + 1);
            auto core = s_.subspan(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(c));
            auto suffix = s_.subspan(static_cast<std::size_t>(i - 1),
                                     static_cast<std::size_t>(K_ - i + 1));
            double ell_m = ell_[static_cast<std::size_t>(m)];
            if (best > 0.0 && grid_harmonic_rejects(core, suffix, m, ell_m, best))
                continue;  // value <= best, cannot improve the maximum
            double L = best, R = 1.0;
            for (int it = 0; it < 52; ++it) {
                double eps = 0.5 * (L + R);
                if (grid_harmonic_rejects(core, suffix, m, ell_m, eps))
                    R = eps;
                else
                    L = eps;
            }
            best = std::max(best, R);
        }
        return std::min(best, 1.0);
    }

 private:
    std::vector<double> ell_;
};

// Fallback: materializes every set. Fine for small K and odd families.
class GenericEngine final : public Engine {
 public:
    GenericEngine(std::span<const double> sorted, MergeMethod method)
        : Engine(sorted), method_(std::move(method)) {}

    double cell(int l, int j) const override {
        double best = 0.0;
        std::vector<double> buf;
        for (int i = K_ + 1; i >= l + 1; --i) {
            buf.clear();
            for (int u = j; u <= l; ++u) buf.push_back(sv(u));
            for (int u = i; u <= K_; ++u) buf.push_back(sv(u));
            best = std::max(best, evaluate_arity(method_, buf));
        }
        return best;
    }

 private:
    MergeMethod method_;
};

inline std::unique_ptr<Engine> make_engine(const MergeMethod& m, std::span<const double> sorted) {
    using Kind = MergeMethod::Kind;
    switch (m.kind) {
        case Kind::bonferroni:
            return std::make_unique<BonferroniEngine>(sorted);
        case Kind::simes:
            return std::make_unique<SimesHommelEngine>(sorted, false);
        case Kind::hommel:
            return std::make_unique<SimesHommelEngine>(sorted, true);
        case Kind::o_family:
            return std::make_unique<OFamilyEngine>(sorted, m.k, false);
        case Kind::o_star:
            return std::make_unique<OFamilyEngine>(sorted, m.k, true);
        case Kind::m_family:
            if (m.r == -kInf) return std::make_unique<BonferroniEngine>(sorted);
            if (std::isinf(m.r)) return std::make_unique<GenericEngine>(sorted, m);
            return std::make_unique<MFamilyEngine>(sorted, m.r);
        case Kind::m_star:
            return std::make_unique<MStarEngine>(sorted, m.r);
        case Kind::grid_harmonic:
            return std::make_unique<GridHarmonicEngine>(sorted);
        default:
            return std::make_unique<GenericEngine>(sorted, m);
    }
}

}  // namespace dm_detail

// GWGS discovery matrix via the suffix-augmented set recursion, with the
// running-max correction DM_{l,j} = max_{j' <= j} DM'_{l,j'}. Rows are
// independent and computed in parallel.
inline DiscoveryMatrix discovery_matrix(const PVector& p, const MergeMethod& family, int corner,
                                        std::vector<double> alphas = {0.01, 0.05}) {
    const int K = p.k();
    if (corner < 1 || corner > K) throw range_error("discovery_matrix: corner must be in 1..K");
    DiscoveryMatrix out;
    out.corner = corner;
    out.K = K;
    out.method_tag = family.text;
    out.alphas = std::move(alphas);
    out.cells.assign(static_cast<std::size_t>(corner) * (corner + 1) / 2, 0.0);

    auto engine = dm_detail::make_engine(family, p.sorted());
    parallel_for(static_cast<std::size_t>(corner), [&](std::size_t row) {
        int l = static_cast<int>(row) + 1;
        double running = 0.0;
        for (int j = 1; j <= l; ++j) {
            running = std::max(running, engine->cell(l, j));
            out.cells[DiscoveryMatrix::index(l, j)] = running;
        }
    });
    return out;
}

/// Per-cell bucket index: 0 for <= alphas[0], ..., |alphas| for above all.
inline std::vector<int> categorize(const DiscoveryMatrix& dm, std::span<const double> alphas) {
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (alphas[i] < alphas[i - 1]) throw range_error("categorize: alphas must ascend");
    std::vector<int> buckets(dm.cells.size(), 0);
    for (std::size_t i = 0; i < dm.cells.size(); ++i) {
        int b = 0;
        while (b < static_cast<int>(alphas.size()) && dm.cells[i] > alphas[static_cast<std::size_t>(b)]) ++b;
        buckets[i] = b;
    }
    return buckets;
}

// Largest j with dm[l][j] <= alpha: a 1-alpha lower confidence bound on the
// number of true discoveries among the l smallest p-values.
inline int true_discovery_lower_bound(const DiscoveryMatrix& dm, int l, double alpha) {
    if (l < 1 || l > dm.corner) throw range_error("true_discovery_lower_bound: l outside corner");
    int lo = 0, hi = l;  // row is nondecreasing in j
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (dm.at(l, mid) <= alpha)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

}  // namespace pmerge
