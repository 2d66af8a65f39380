#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pmerge/classic.hpp"
#include "pmerge/coefficients.hpp"
#include "pmerge/errors.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

// ---------------------------------------------------------------------------
// K = 2 special theory: diagonal curves and upper p-probability.
// ---------------------------------------------------------------------------

// Epigraph boundary of an increasing right-continuous f: [0,1) -> [0,1],
// stored as a polyline; consecutive nodes with equal x encode a jump.
// f(0-) is read as 0 and f(1) as 1, so the chain always reaches (0,0)
// downward and (1,1) upward.
class DiagonalCurve {
 public:
    struct Node {
        double x, y;
    };

    static DiagonalCurve from_nodes(std::vector<Node> nodes) {
        if (nodes.empty()) throw curve_error("diagonal curve needs at least one node");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].x < 0.0 || nodes[i].x > 1.0 || nodes[i].y < 0.0 || nodes[i].y > 1.0)
                throw curve_error("curve node outside [0,1]^2");
            if (i > 0 && (nodes[i].x < nodes[i - 1].x || nodes[i].y < nodes[i - 1].y))
                throw curve_error("curve nodes must be nondecreasing in both coordinates");
        }
        if (nodes.front().x > 0.0) nodes.insert(nodes.begin(), Node{0.0, nodes.front().y});
        if (nodes.back().x < 1.0) nodes.push_back(Node{1.0, nodes.back().y});
        return DiagonalCurve(std::move(nodes));
    }

    static DiagonalCurve identity() { return from_nodes({{0.0, 0.0}, {1.0, 1.0}}); }

    /// f(x), right-continuous value of the boundary function.
    double value(double x) const {
        if (x >= 1.0) return 1.0;
        // last node with node.x <= x; equal x resolves to the top of the jump
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                                   [](double v, const Node& n) { return v < n.x; });
        const Node& a = *(it - 1);
        if (it == nodes_.end()) return a.y;
        const Node& b = *it;
        double t = (x - a.x) / (b.x - a.x);
        return a.y + t * (b.y - a.y);
    }

    /// sup{x in [0,1] : f(x-) <= y}.
    double crossing(double y) const {
        if (y >= nodes_.back().y) return 1.0;
        // first node strictly above level y
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y,
                                   [](double v, const Node& n) { return v < n.y; });
        if (it == nodes_.begin()) return nodes_.front().x;  // jump over y at x = 0
        const Node& a = *(it - 1);
        const Node& b = *it;
        if (b.x == a.x || b.y == a.y) return b.x;  // jump or flat boundary case
        double t = (y - a.y) / (b.y - a.y);
        return a.x + t * (b.x - a.x);
    }

    const std::vector<Node>& nodes() const { return nodes_; }

 private:
    explicit DiagonalCurve(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    std::vector<Node> nodes_;
};

// Admissible K=2 merger attached to a diagonal curve: u1 + u2 at the largest
// curve point below (p1, p2). The chain contains (0,0) by the f(0-) = 0
// convention, so a dominating point always exists.
inline double diag_curve_merge(const DiagonalCurve& curve, double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
        throw range_error("diag_curve_merge: p1, p2 must lie in [0,1]");
    double f_at = curve.value(p1);
    double v = (f_at <= p2) ? p1 + f_at : curve.crossing(p2) + p2;
    return std::min(v, 1.0);
}

// Boundary description of a lower set E in [0,1]^2: a polyline with
// nonincreasing heights; heights below 0 mark columns outside E, and columns
// beyond the last node are outside E.
struct LowerSetBoundary {
    struct Node {
        double x, y;
    };
    std::vector<Node> nodes;
};

// Upper p-probability of a lower set: 1 ^ inf{u1 + u2 over the complement}.
// The infimum of u + max(b(u), 0) over a piecewise-linear boundary sits at a
// node or at a zero crossing of b.
inline double ucp_lower_set_k2(const LowerSetBoundary& bd) {
    const auto& nd = bd.nodes;
    if (nd.empty() || nd.front().x > 0.0 || nd.front().y < 0.0)
        throw empty_set_error("lower set is empty (no column at u1 = 0)");
    for (std::size_t i = 1; i < nd.size(); ++i)
        if (nd[i].x < nd[i - 1].x) throw value_error("boundary nodes must have nondecreasing x");
    double best = kInf;
    for (std::size_t i = 0; i < nd.size(); ++i) {
        best = std::min(best, nd[i].x + std::max(nd[i].y, 0.0));
        if (i + 1 < nd.size()) {
            const auto &a = nd[i], &b = nd[i + 1];
            if ((a.y > 0.0) != (b.y > 0.0) && b.x > a.x && a.y != b.y) {
                double t = a.y / (a.y - b.y);  // where the height hits 0
                best = std::min(best, a.x + t * (b.x - a.x));
            }
        }
    }
    if (nd.back().x < 1.0) best = std::min(best, nd.back().x);
    return std::min(best, 1.0);
}

// ---------------------------------------------------------------------------
// Domination structure of scaled power means and the M-family.
// ---------------------------------------------------------------------------

enum class DominationRelation { first_dominates, second_dominates, incomparable };

inline std::string to_string(DominationRelation r) {
    switch (r) {
        case DominationRelation::first_dominates: return "first_dominates";
        case DominationRelation::second_dominates: return "second_dominates";
        default: return "incomparable";
    }
}

// One witness vector for a strictness claim, two for incomparability.
struct DominationVerdict {
    DominationRelation relation = DominationRelation::incomparable;
    std::vector<std::vector<double>> witnesses;
};

namespace detail {

// Deterministic witness grid: proof-motivated shapes plus a small tensor
// grid for K <= 4. All entries lie in [0, 1e4].
inline std::vector<std::vector<double>> witness_grid(int K) {
    std::vector<std::vector<double>> out;
    const double levels[] = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    for (double t : levels) out.push_back(std::vector<double>(static_cast<std::size_t>(K), t));
    auto shape = [&](double head, double tail) {
        std::vector<double> v(static_cast<std::size_t>(K), tail);
        v[0] = head;
        return v;
    };
    out.push_back(shape(1.0, 0.0));
    for (double big : {1e1, 1e2, 1e4}) out.push_back(shape(1.0, big));
    for (double small : {1e-4, 1e-2}) out.push_back(shape(small, 1.0));
    std::vector<double> ramp(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) ramp[static_cast<std::size_t>(i)] = (i + 1.0) / K;
    out.push_back(ramp);
    if (K <= 4) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(K), 0);
        const std::size_t n = sizeof(levels) / sizeof(levels[0]);
        while (true) {
            std::vector<double> v(static_cast<std::size_t>(K));
            for (int i = 0; i < K; ++i) v[static_cast<std::size_t>(i)] = levels[idx[static_cast<std::size_t>(i)]];
            out.push_back(std::move(v));
            int pos = 0;
            while (pos < K && ++idx[static_cast<std::size_t>(pos)] == n) {
                idx[static_cast<std::size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == K) break;
        }
    }
    return out;
}

using RawMerge = std::function<double(std::span<const double>)>;

// first strict-gap witness: g(p) < h(p) - 1e-12 on the grid
inline std::vector<double> find_strict_witness(const RawMerge& g, const RawMerge& h, int K) {
    for (const auto& v : witness_grid(K)) {
        double gv = g(v), hv = h(v);
        if (std::isfinite(gv) && std::isfinite(hv) && gv < hv - 1e-12) return v;
    }
    return {};
}

}  // namespace detail

// Domination between scaled means a M_{r,K} and b M_{s,K}, r < s:
// the first dominates iff a <= b; the second dominates iff rs > 0 and
// a K^{-1/r} >= b K^{-1/s}. Witnesses are verified numerically on the
// deterministic grid.
inline DominationVerdict m_scaled_domination(double r, double a, double s, double b, int K) {
    if (!(r < s)) throw range_error("m_scaled_domination: requires r < s");
    if (K < 2) throw range_error("m_scaled_domination: K >= 2");
    detail::RawMerge Fr = [r, a](std::span<const double> v) { return a * power_mean(v, r); };
    detail::RawMerge Fs = [s, b](std::span<const double> v) { return b * power_mean(v, s); };
    DominationVerdict verdict;
    if (a <= b) {
        verdict.relation = DominationRelation::first_dominates;
        auto w = detail::find_strict_witness(Fr, Fs, K);
        if (!w.empty()) verdict.witnesses.push_back(std::move(w));
    } else if (r * s > 0.0 &&
               a * std::pow(static_cast<double>(K), -1.0 / r) >=
                   b * std::pow(static_cast<double>(K), -1.0 / s)) {
        verdict.relation = DominationRelation::second_dominates;
        auto w = detail::find_strict_witness(Fs, Fr, K);
        if (!w.empty()) verdict.witnesses.push_back(std::move(w));
    } else {
        verdict.relation = DominationRelation::incomparable;
        auto w1 = detail::find_strict_witness(Fr, Fs, K);
        auto w2 = detail::find_strict_witness(Fs, Fr, K);
        if (!w1.empty()) verdict.witnesses.push_back(std::move(w1));
        if (!w2.empty()) verdict.witnesses.push_back(std::move(w2));
    }
    return verdict;
}

// Domination inside the M-family of precise mergers: for K >= 3 the only
// relation is F_{r,K} dominated by F_{s,K} when K-1 <= r < s; for K = 2 it
// is 1 <= r < s or s < r <= 1.
inline DominationVerdict m_family_domination(double r, double s, int K) {
    if (r == s) throw range_error("m_family_domination: r != s required");
    if (K < 2) throw range_error("m_family_domination: K >= 2");
    auto dominated_by = [K](double rr, double ss) {
        // whether F_{rr,K} is dominated by F_{ss,K}
        if (K >= 3) return K - 1.0 <= rr && rr < ss;
        return (1.0 <= rr && rr < ss) || (ss < rr && rr <= 1.0);
    };
    auto merged = [K](double rr) {
        const MCoefficients& c = solve_m_coefficients(rr, K);
        double bb = c.b;
        return detail::RawMerge(
            [rr, bb](std::span<const double> v) { return std::min(bb * power_mean(v, rr), 1.0); });
    };
    DominationVerdict verdict;
    detail::RawMerge Fr = merged(r), Fs = merged(s);
    if (dominated_by(r, s)) {
        verdict.relation = DominationRelation::second_dominates;
        auto w = detail::find_strict_witness(Fs, Fr, K);
        if (!w.empty()) verdict.witnesses.push_back(std::move(w));
    } else if (dominated_by(s, r)) {
        verdict.relation = DominationRelation::first_dominates;
        auto w = detail::find_strict_witness(Fr, Fs, K);
        if (!w.empty()) verdict.witnesses.push_back(std::move(w));
    } else {
        verdict.relation = DominationRelation::incomparable;
        auto w1 = detail::find_strict_witness(Fr, Fs, K);
        auto w2 = detail::find_strict_witness(Fs, Fr, K);
        if (!w1.empty()) verdict.witnesses.push_back(std::move(w1));
        if (!w2.empty()) verdict.witnesses.push_back(std::move(w2));
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Non-symmetric mergers dominating the grid harmonic function for K = 2, 3.
// ---------------------------------------------------------------------------

struct PrimeCounterexample {
    int K = 2;
    std::string name;
    std::function<double(const PVector&)> eval;
};

// For K=2: (p1,p2) -> 3 p1 ^ (3/2) p2 ^ 1. For K=3 the merger defined by the
// rejection sets sum_k g_k(p_k/eps) >= 1 with step calibrators
//   g1 = g + 1/6 on (4/11,6/11], g2 = g3 = g - 1/12 on (4/11,6/11],
//   g  = 1 on [0,2/11], 1/2 on (2/11,4/11], 1/3 on (4/11,6/11].
// The value is recovered exactly: the sum only changes when some p_k/eps
// crosses a breakpoint, so the minimum rejecting eps lies on that grid.
inline PrimeCounterexample prime_counterexample(int K) {
    if (K == 2) {
        PrimeCounterexample pc;
        pc.K = 2;
        pc.name = "prime-k2";
        pc.eval = [](const PVector& p) {
            if (p.k() != 2) throw range_error("prime-k2: needs exactly 2 p-values");
            const auto& v = p.values();
            return std::min({3.0 * v[0], 1.5 * v[1], 1.0});
        };
        return pc;
    }
    if (K == 3) {
        PrimeCounterexample pc;
        pc.K = 3;
        pc.name = "prime-k3";
        pc.eval = [](const PVector& p) {
            if (p.k() != 3) throw range_error("prime-k3: needs exactly 3 p-values");
            const auto& v = p.values();
            if (p.min() == 0.0) return 0.0;
            // step heights in twelfths per band 1..3 (band 0 = beyond support)
            static const int tw[3][4] = {{0, 12, 6, 6},    // g1 = g + 1/6 on band 3
                                         {0, 12, 6, 3},    // g2 = g - 1/12 on band 3
                                         {0, 12, 6, 3}};   // g3 = g2
            // candidate eps = v[k0] / (2 t0 / 11); band of coordinate k at that
            // eps: least t with v_k/eps <= 2t/11, i.e. v_k * t0 <= v[k0] * t.
            // Multiplication-only comparisons keep grid points exact.
            auto rejects = [&](int k0, int t0) {
                int sum = 0;
                for (int k = 0; k < 3; ++k) {
                    int band = 0;
                    for (int t = 1; t <= 3; ++t)
                        if (v[static_cast<std::size_t>(k)] * t0 <=
                            v[static_cast<std::size_t>(k0)] * t) {
                            band = t;
                            break;
                        }
                    sum += tw[k][band];
                }
                return sum >= 12;
            };
            double best = 1.0;
            for (int k0 = 0; k0 < 3; ++k0)
                for (int t0 = 1; t0 <= 3; ++t0) {
                    double eps = v[static_cast<std::size_t>(k0)] * 11.0 / (2.0 * t0);
                    if (eps < best && rejects(k0, t0)) best = eps;
                }
            return best;
        };
        return pc;
    }
    throw range_error("prime_counterexample: only K = 2 or 3");
}

}  // namespace pmerge
