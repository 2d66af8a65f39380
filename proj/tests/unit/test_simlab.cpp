#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmerge/normal.hpp"
#include "pmerge/simlab.hpp"

using namespace pmerge;

TEST_CASE("normal cdf and quantile") {
    CHECK(norm_cdf(0.0) == Catch::Approx(0.5));
    CHECK(norm_cdf(-5.0) == Catch::Approx(2.866515718791933e-7).epsilon(1e-12));
    for (double p : {1e-12, 1e-9, 1e-4, 0.3, 0.5, 0.9, 1.0 - 1e-9}) {
        double x = norm_quantile(p);
        CHECK(norm_cdf(x) == Catch::Approx(p).epsilon(1e-9));
    }
    CHECK_THROWS_AS(norm_quantile(0.0), range_error);
}

TEST_CASE("draws are deterministic and respect the factor structure") {
    ZTestModel model{100, 10, -5.0, 0.9, true, 42};
    auto a = draw_pvalues(model, 3);
    auto b = draw_pvalues(model, 3);
    CHECK(a.values() == b.values());
    auto c = draw_pvalues(model, 4);
    CHECK(a.values() != c.values());

    // iid case: null block roughly uniform (KS-style bound at 1e5 draws)
    ZTestModel flat{2, 0, -5.0, 0.0, false, 7};
    int below = 0;
    const int n = 100000;
    for (int rep = 0; rep < n; ++rep) {
        auto p = draw_pvalues(flat, static_cast<std::uint64_t>(rep));
        if (p.values()[0] <= 0.3) ++below;
    }
    CHECK(std::abs(below / static_cast<double>(n) - 0.3) < 0.006);
}

TEST_CASE("sample correlation of the bulk and the flipped tail") {
    ZTestModel model{3, 0, -5.0, 0.9, true, 11};
    const int n = 100000;
    double s01 = 0, s02 = 0;
    for (int rep = 0; rep < n; ++rep) {
        auto p = draw_pvalues(model, static_cast<std::uint64_t>(rep));
        double z0 = norm_quantile(p.values()[0]);
        double z1 = norm_quantile(p.values()[1]);
        double z2 = norm_quantile(p.values()[2]);
        s01 += z0 * z1;
        s02 += z0 * z2;
    }
    CHECK(s01 / n == Catch::Approx(0.9).margin(0.02));
    CHECK(s02 / n == Catch::Approx(-0.9).margin(0.02));
}

TEST_CASE("alternative block sits near its mean") {
    ZTestModel model{2, 2, -5.0, 0.0, false, 5};
    int below = 0;
    const int n = 20000;
    const double median = norm_cdf(-5.0);
    for (int rep = 0; rep < n; ++rep) {
        auto p = draw_pvalues(model, static_cast<std::uint64_t>(rep));
        if (p.values()[0] <= median) ++below;
    }
    CHECK(below / static_cast<double>(n) == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("discretize") {
    auto p = discretize(PVector::validate({0.00003, 0.5, 0.0}), 10000);
    CHECK(p.values()[0] == Catch::Approx(0.0001));
    CHECK(p.values()[1] == 0.5);
    CHECK(p.values()[2] == 0.0);
    // representation noise does not push exact grid points up
    CHECK(discretize(PVector::validate({0.1, 0.2}), 10000).values()[0] == Catch::Approx(0.1));
}

TEST_CASE("borderline epsilon, small instances") {
    // Bonferroni: K eps <= alpha exactly
    DiscreteScenario s{100, 10, 0.01};
    auto bonf = MergeMethod::parse("bonferroni");
    CHECK(borderline_epsilon(s, bonf) == Catch::Approx(1e-4).epsilon(1e-6));

    auto hom = MergeMethod::parse("hommel");
    double eps_h = borderline_epsilon(s, hom);
    CHECK(eps_h == Catch::Approx(1e-4 / harmonic_number(100)).epsilon(1e-6));

    // discretized Bonferroni can never reach 1%: ceil forces K * 1e-4 = 1e-2...
    // with K=1e5 the merged value is >= 10 > alpha for every eps
    DiscreteScenario big{100000, 10, 0.01};
    CHECK_THROWS_AS(borderline_epsilon(big, bonf, 10000), no_rejection_error);
}

TEST_CASE("thread count does not change any output") {
    ZTestModel model{50, 5, -5.0, 0.9, true, 31};
    auto grid = default_cdf_grid(8);
    auto fam = MergeMethod::parse("m-star:r=-1");

    setenv("PMERGE_THREADS", "1", 1);
    auto cdf1 = empirical_cdf(model, fam, 500, grid);
    auto dm1 = discovery_matrix_median(model, fam, 10, 3);
    setenv("PMERGE_THREADS", "3", 1);
    auto cdf3 = empirical_cdf(model, fam, 500, grid);
    auto dm3 = discovery_matrix_median(model, fam, 10, 3);
    unsetenv("PMERGE_THREADS");

    for (std::size_t g = 0; g < grid.size(); ++g) CHECK(cdf1[g].fraction == cdf3[g].fraction);
    CHECK(dm1.cells == dm3.cells);
}

TEST_CASE("empirical cdf determinism and validity bound") {
    ZTestModel null_model{20, 0, -5.0, 0.5, true, 77};
    auto grid = default_cdf_grid(16);
    auto c1 = empirical_cdf(null_model, MergeMethod::parse("hommel"), 4000, grid);
    auto c2 = empirical_cdf(null_model, MergeMethod::parse("hommel"), 4000, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CHECK(c1[g].fraction == c2[g].fraction);
        double se = std::sqrt(grid[g] * (1 - grid[g]) / 4000.0);
        CHECK(c1[g].fraction <= grid[g] + 4 * se + 1e-12);
    }
}

TEST_CASE("adversarial permutation model marginals and simes exactness") {
    const int K = 5;
    const double alpha = 0.04;
    AdversarialSampler sampler(K, alpha, 123);
    const int n = 200000;
    int simes_hits = 0;
    std::vector<int> margin_hits(static_cast<std::size_t>(K) + 1, 0);
    for (int rep = 0; rep < n; ++rep) {
        auto p = sampler.draw(static_cast<std::uint64_t>(rep));
        if (simes(p) <= K * alpha + 1e-12) ++simes_hits;
        double first = p.values()[0];
        for (int k = 1; k <= K; ++k)
            if (std::abs(first - k * alpha) < 1e-12) ++margin_hits[static_cast<std::size_t>(k)];
    }
    // Q(S_K <= K alpha) = K alpha exactly
    double freq = simes_hits / static_cast<double>(n);
    double se = std::sqrt(K * alpha * (1 - K * alpha) / n);
    CHECK(freq == Catch::Approx(K * alpha).margin(3 * se + 1e-9));
    // each atom k alpha carries mass alpha
    for (int k = 1; k <= K; ++k) {
        double fk = margin_hits[static_cast<std::size_t>(k)] / static_cast<double>(n);
        CHECK(fk == Catch::Approx(alpha).margin(4 * std::sqrt(alpha * (1 - alpha) / n)));
    }
    CHECK_THROWS_AS(AdversarialSampler(5, 0.3, 1), range_error);
}

TEST_CASE("validity under the adversarial model for valid mergers") {
    const int K = 4;
    const double alpha = 0.05;
    AdversarialSampler sampler(K, alpha, 321);
    const char* specs[] = {"bonferroni", "hommel", "grid-harmonic", "m:r=-1", "m-star:r=-1"};
    const int n = 50000;
    for (const char* spec : specs) {
        auto m = MergeMethod::parse(spec);
        for (double t : {0.05, 0.1, 0.2}) {
            int hits = 0;
            for (int rep = 0; rep < n; ++rep)
                if (evaluate(m, sampler.draw(static_cast<std::uint64_t>(rep))).p <= t) ++hits;
            double se = std::sqrt(t * (1 - t) / n);
            INFO(spec << " t=" << t);
            REQUIRE(hits / static_cast<double>(n) <= t + 4 * se);
        }
    }
}
