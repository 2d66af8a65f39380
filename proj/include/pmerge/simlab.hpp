#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmerge/discovery.hpp"
#include "pmerge/method.hpp"
#include "pmerge/normal.hpp"
#include "pmerge/rng.hpp"
#include "pmerge/util.hpp"

namespace pmerge {

// Correlated z-test model: one-factor Gaussian with bulk correlation rho and
// an optional last observation anticorrelated with the bulk. The first K1
// observations carry the alternative mean. Base p-values are Phi(X).
struct ZTestModel {
    int K = 2;
    int K1 = 0;
    double mu_alt = -5.0;
    double rho = 0.0;
    bool flip_last = true;
    std::uint64_t seed = 42;
};

// Replication rep draws from the substream (seed, rep); identical seeds give
// bit-identical vectors on every platform and thread layout.
inline PVector draw_pvalues(const ZTestModel& model, std::uint64_t rep) {
    if (model.K < 2) throw range_error("draw_pvalues: K >= 2");
    if (model.K1 < 0 || model.K1 > model.K) throw range_error("draw_pvalues: 0 <= K1 <= K");
    if (!(model.rho >= 0.0 && model.rho < 1.0)) throw range_error("draw_pvalues: rho in [0,1)");
    CounterRng rng(model.seed, rep);
    const double sq_rho = std::sqrt(model.rho);
    const double sq_com = std::sqrt(1.0 - model.rho);
    const double z = rng.next_normal();
    std::vector<double> p(static_cast<std::size_t>(model.K));
    for (int i = 0; i < model.K; ++i) {
        double mu = (i < model.K1) ? model.mu_alt : 0.0;
        double load = (model.flip_last && i == model.K - 1) ? -sq_rho : sq_rho;
        double x = mu + load * z + sq_com * rng.next_normal();
        p[static_cast<std::size_t>(i)] = norm_cdf(x);
    }
    return PVector::validate(std::move(p));
}

struct CdfPoint {
    double threshold = 0.0;
    double fraction = 0.0;
};

inline PVector discretize(const PVector& p, long D);

// Empirical CDF of the merged p-value over independent replications,
// evaluated on a threshold grid. Replications split over threads; counts
// are integers, so the reduction is exact and order-independent. With
// discretize_D > 0 every input p-value snaps up to the 1/D grid first.
inline std::vector<CdfPoint> empirical_cdf(const ZTestModel& model, const MergeMethod& method,
                                           int reps, std::span<const double> grid,
                                           long discretize_D = 0) {
    if (reps < 1) throw range_error("empirical_cdf: reps >= 1");
    std::vector<double> values(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
        PVector p = draw_pvalues(model, rep);
        if (discretize_D > 0) p = discretize(p, discretize_D);
        values[rep] = evaluate(method, p).p;
    });
    std::vector<CdfPoint> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        long count = 0;
        for (double v : values)
            if (v <= grid[g]) ++count;
        out[g] = {grid[g], static_cast<double>(count) / reps};
    }
    return out;
}

inline std::vector<double> default_cdf_grid(int points = 512, double hi = 1.0) {
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = hi * (i + 1.0) / points;
    return g;
}

// Componentwise ceil(D p)/D. The tolerant ceiling reads products a few ulps
// above an integer as that integer, so exact grid points stay fixed.
inline PVector discretize(const PVector& p, long D) {
    if (D < 1) throw range_error("discretize: D >= 1");
    std::vector<double> v(p.values());
    for (double& x : v) x = ceil_tol(x * static_cast<double>(D)) / static_cast<double>(D);
    return PVector::validate(std::move(v));
}

// Toy discrete scenario: K1 small p-values eps, 2 eps, ..., K1 eps among
// K - K1 ones.
struct DiscreteScenario {
    int K = 2;
    int K1 = 1;
    double alpha_target = 0.01;
};

inline PVector scenario_vector(const DiscreteScenario& s, double eps) {
    std::vector<double> v(static_cast<std::size_t>(s.K), 1.0);
    for (int k = 1; k <= s.K1; ++k) v[static_cast<std::size_t>(k - 1)] = k * eps;
    return PVector::validate(std::move(v));
}

// Largest eps whose scenario vector still merges to at most alpha_target.
// Log-space bisection, 80 iterations (relative gap ~ 2^-80 of the log range,
// far below the 1e-6 contract). Optional pre-merge discretization to a 1/D
// grid; Bonferroni then never rejects and raises no_rejection_error.
inline double borderline_epsilon(const DiscreteScenario& s, const MergeMethod& method,
                                 long discretize_D = 0) {
    if (s.K1 < 1 || s.K1 > s.K) throw range_error("borderline_epsilon: 1 <= K1 <= K");
    auto value_at = [&](double eps) {
        PVector p = scenario_vector(s, eps);
        if (discretize_D > 0) p = discretize(p, discretize_D);
        return evaluate(method, p).p;
    };
    double lo = std::log(1e-16), hi = std::log(1.0 / s.K1);
    if (value_at(std::exp(hi)) <= s.alpha_target) return std::exp(hi);
    if (value_at(std::exp(lo)) > s.alpha_target)
        throw no_rejection_error("method '" + method.text +
                                 "' cannot reach the target even as eps -> 0");
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (value_at(std::exp(mid)) <= s.alpha_target)
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(lo);
}

// Adversarial exchangeable model from the Simes-minimum construction: with
// probability K alpha a uniformly random permutation of (alpha, ..., K alpha),
// otherwise the all-ones vector. Every margin is a p-variable.
class AdversarialSampler {
 public:
    AdversarialSampler(int K, double alpha, std::uint64_t seed)
        : K_(K), alpha_(alpha), seed_(seed) {
        if (K < 2) throw range_error("adversarial model: K >= 2");
        if (!(alpha > 0.0) || K * alpha > 1.0)
            throw range_error("adversarial model: need 0 < K alpha <= 1");
    }

    PVector draw(std::uint64_t rep) const {
        CounterRng rng(seed_, rep);
        std::vector<double> v(static_cast<std::size_t>(K_), 1.0);
        if (rng.next_uniform() < K_ * alpha_) {
            for (int k = 0; k < K_; ++k) v[static_cast<std::size_t>(k)] = (k + 1) * alpha_;
            for (int k = K_ - 1; k > 0; --k) {
                auto j = rng.next_below(static_cast<std::uint64_t>(k) + 1);
                std::swap(v[static_cast<std::size_t>(k)], v[j]);
            }
        }
        return PVector::validate(std::move(v));
    }

    int k() const { return K_; }
    double alpha() const { return alpha_; }

 private:
    int K_;
    double alpha_;
    std::uint64_t seed_;
};

// Element-wise median of discovery matrices over independent replications
// of the z-test model (the smoothing used for reproducible corner plots).
inline DiscoveryMatrix discovery_matrix_median(const ZTestModel& model, const MergeMethod& family,
                                               int corner, int runs,
                                               std::vector<double> alphas = {0.01, 0.05}) {
    if (runs < 1) throw range_error("discovery_matrix_median: runs >= 1");
    std::vector<DiscoveryMatrix> mats(static_cast<std::size_t>(runs));
    parallel_for(static_cast<std::size_t>(runs), [&](std::size_t run) {
        mats[run] = discovery_matrix(draw_pvalues(model, run), family, corner, alphas);
    });
    DiscoveryMatrix out = mats[0];
    std::vector<double> tmp(static_cast<std::size_t>(runs));
    for (std::size_t cell = 0; cell < out.cells.size(); ++cell) {
        for (std::size_t run = 0; run < mats.size(); ++run) tmp[run] = mats[run].cells[cell];
        std::sort(tmp.begin(), tmp.end());
        std::size_t n = tmp.size();
        out.cells[cell] = (n % 2 == 1) ? tmp[n / 2] : 0.5 * (tmp[n / 2 - 1] + tmp[n / 2]);
    }
    return out;
}

}  // namespace pmerge
