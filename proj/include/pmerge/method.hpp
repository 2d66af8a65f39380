#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmerge/analysis.hpp"
#include "pmerge/calibrator.hpp"
#include "pmerge/classic.hpp"
#include "pmerge/induced.hpp"
#include "pmerge/pvector.hpp"

namespace pmerge {

// Tagged union over all merging families with their parameters. Parsed from
// the CLI spec strings: bonferroni | simes | hommel | o:k=<int> |
// o-star:k=<int> | m:r=<real> | m-star:r=<real> | grid-harmonic |
// induced:<calibrator-spec>:M=<int>. Diagonal-curve mergers (K=2) exist
// programmatically only.
struct MergeMethod {
    enum class Kind {
        bonferroni,
        simes,
        hommel,
        o_family,
        o_star,
        m_family,
        m_star,
        grid_harmonic,
        induced,
        diag_curve
    };

    Kind kind = Kind::bonferroni;
    double r = 0.0;
    int k = 1;
    int M = 52;
    std::string calibrator_spec;
    std::shared_ptr<const DiagonalCurve> curve;
    std::string text = "bonferroni";

    bool universally_valid() const { return kind != Kind::simes; }

    static MergeMethod parse(std::string_view s);
};

namespace detail {

inline double parse_real(std::string_view s, std::string_view what) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw method_error(std::string(what) + ": cannot parse real '" + std::string(s) + "'");
    return v;
}

inline int parse_int(std::string_view s, std::string_view what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw method_error(std::string(what) + ": cannot parse integer '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

inline MergeMethod MergeMethod::parse(std::string_view s) {
    MergeMethod m;
    m.text = std::string(s);
    auto starts = [&](std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; };
    if (s == "bonferroni") {
        m.kind = Kind::bonferroni;
    } else if (s == "simes") {
        m.kind = Kind::simes;
    } else if (s == "hommel") {
        m.kind = Kind::hommel;
    } else if (s == "grid-harmonic") {
        m.kind = Kind::grid_harmonic;
    } else if (starts("o:k=")) {
        m.kind = Kind::o_family;
        m.k = detail::parse_int(s.substr(4), "o:k");
    } else if (starts("o-star:k=")) {
        m.kind = Kind::o_star;
        m.k = detail::parse_int(s.substr(9), "o-star:k");
    } else if (starts("m:r=")) {
        m.kind = Kind::m_family;
        m.r = detail::parse_real(s.substr(4), "m:r");
    } else if (starts("m-star:r=")) {
        m.kind = Kind::m_star;
        m.r = detail::parse_real(s.substr(9), "m-star:r");
    } else if (starts("induced:")) {
        m.kind = Kind::induced;
        std::string_view rest = s.substr(8);
        auto mpos = rest.rfind(":M=");
        if (mpos != std::string_view::npos) {
            m.M = detail::parse_int(rest.substr(mpos + 3), "induced:M");
            rest = rest.substr(0, mpos);
        }
        if (m.M < 1) throw method_error("induced: M must be >= 1");
        if (rest.empty()) throw method_error("induced: missing calibrator spec");
        m.calibrator_spec = std::string(rest);
    } else {
        throw method_error("unknown method '" + std::string(s) + "'");
    }
    return m;
}

// Builds the calibrator named by a CLI spec string for arity K:
// "grid-harmonic" | "mstar:r=<real>" | "o:k=<int>".
inline Calibrator make_calibrator(std::string_view spec, int K) {
    if (spec == "grid-harmonic") return grid_harmonic_calibrator(K);
    if (spec.substr(0, 8) == "mstar:r=")
        return mstar_calibrator(detail::parse_real(spec.substr(8), "mstar:r"), K);
    if (spec.substr(0, 4) == "o:k=") return o_family_calibrator(detail::parse_int(spec.substr(4), "o:k"), K);
    throw method_error("unknown calibrator spec '" + std::string(spec) + "'");
}

inline constexpr int kGridHarmonicExactLimit = 512;  // exact enumeration up to here

// The grid harmonic calibrator carries K breakpoints; hot paths reuse one
// instance per arity instead of rebuilding it.
inline const Calibrator& cached_grid_harmonic(int K) {
    static std::map<int, Calibrator> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(K);
    if (it == cache.end()) it = cache.emplace(K, grid_harmonic_calibrator(K)).first;
    return it->second;
}

// Full-arity evaluation with the method's default path.
inline MergeResult evaluate(const MergeMethod& m, const PVector& p) {
    MergeResult res;
    res.method_tag = m.text;
    switch (m.kind) {
        case MergeMethod::Kind::bonferroni:
            res.p = bonferroni(p);
            return res;
        case MergeMethod::Kind::simes:
            res.p = simes(p);
            return res;
        case MergeMethod::Kind::hommel:
            res.p = hommel(p);
            return res;
        case MergeMethod::Kind::o_family:
            res.p = o_family(p, m.k);
            return res;
        case MergeMethod::Kind::o_star:
            res.p = (p.min() == 0.0) ? 0.0 : o_family(p.clamped_at_one(), m.k);
            return res;
        case MergeMethod::Kind::m_family:
            res.p = m_family(p, m.r);
            return res;
        case MergeMethod::Kind::m_star:
            res.p = m_star(p, m.r);
            return res;
        case MergeMethod::Kind::grid_harmonic:
            if (p.k() <= kGridHarmonicExactLimit) {
                res.p = grid_harmonic_exact(p);
            } else {
                auto r = merge_induced(p, cached_grid_harmonic(p.k()), 52);
                res.p = r.p;
                res.accuracy_bound = r.accuracy_bound;
            }
            return res;
        case MergeMethod::Kind::induced: {
            auto r = merge_induced(p, make_calibrator(m.calibrator_spec, p.k()), m.M);
            res.p = r.p;
            res.accuracy_bound = r.accuracy_bound;
            return res;
        }
        case MergeMethod::Kind::diag_curve: {
            if (p.k() != 2) throw range_error("diag_curve merge requires exactly 2 p-values");
            if (!m.curve) throw range_error("diag_curve method has no curve attached");
            res.p = diag_curve_merge(*m.curve, std::min(p.values()[0], 1.0),
                                     std::min(p.values()[1], 1.0));
            return res;
        }
    }
    throw range_error("unreachable method kind");
}

// ---------------------------------------------------------------------------
// Arity-generic family evaluation (closed testing uses F_m for every set
// size m). Input must be sorted ascending. Arity 1 is the identity for all
// families; arity 2 of the starred power-mean family degenerates to the
// zero-adjusted Bonferroni merger, the only admissible symmetric choice.
// ---------------------------------------------------------------------------
inline double evaluate_arity(const MergeMethod& m, std::span<const double> sorted_vals) {
    const int n = static_cast<int>(sorted_vals.size());
    if (n == 0) throw arity_error("empty index set");
    if (n == 1) return std::min(sorted_vals[0], 1.0);

    switch (m.kind) {
        case MergeMethod::Kind::bonferroni:
            return std::min(n * sorted_vals[0], 1.0);
        case MergeMethod::Kind::simes: {
            double best = kInf;
            for (int k = 1; k <= n; ++k)
                best = std::min(best, static_cast<double>(n) / k * sorted_vals[static_cast<std::size_t>(k - 1)]);
            return std::min(best, 1.0);
        }
        case MergeMethod::Kind::hommel: {
            double best = kInf;
            for (int k = 1; k <= n; ++k)
                best = std::min(best, static_cast<double>(n) / k * sorted_vals[static_cast<std::size_t>(k - 1)]);
            return std::min(harmonic_number(n) * best, 1.0);
        }
        case MergeMethod::Kind::o_family:
        case MergeMethod::Kind::o_star: {
            if (m.k > n)
                throw arity_error("o-family with k=" + std::to_string(m.k) +
                                  " undefined at arity " + std::to_string(n));
            if (m.kind == MergeMethod::Kind::o_star && sorted_vals[0] == 0.0) return 0.0;
            double v = static_cast<double>(n) / m.k *
                       std::min(sorted_vals[static_cast<std::size_t>(m.k - 1)], 1.0);
            return std::min(v, 1.0);
        }
        case MergeMethod::Kind::m_family: {
            const MCoefficients& c = solve_m_coefficients(m.r, n);
            return std::min(c.b * power_mean(sorted_vals, m.r), 1.0);
        }
        case MergeMethod::Kind::m_star: {
            if (sorted_vals[0] == 0.0) return 0.0;
            if (n == 2) return std::min(2.0 * sorted_vals[0], 1.0);
            std::vector<double> copy(sorted_vals.begin(), sorted_vals.end());
            return m_star(PVector::validate(std::move(copy)), m.r);
        }
        case MergeMethod::Kind::grid_harmonic: {
            std::vector<double> copy(sorted_vals.begin(), sorted_vals.end());
            PVector p = PVector::validate(std::move(copy));
            if (n <= kGridHarmonicExactLimit) return grid_harmonic_exact(p);
            return merge_induced(p, cached_grid_harmonic(n), 52).p;
        }
        case MergeMethod::Kind::induced: {
            std::vector<double> copy(sorted_vals.begin(), sorted_vals.end());
            PVector p = PVector::validate(std::move(copy));
            return merge_induced(p, make_calibrator(m.calibrator_spec, n), m.M).p;
        }
        case MergeMethod::Kind::diag_curve:
            throw arity_error("diag_curve family is K=2 only");
    }
    throw range_error("unreachable method kind");
}

}  // namespace pmerge
