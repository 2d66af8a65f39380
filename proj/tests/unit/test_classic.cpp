#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmerge/analysis.hpp"
#include "pmerge/classic.hpp"
#include "pmerge/method.hpp"
#include "pmerge/rng.hpp"

using namespace pmerge;

TEST_CASE("bonferroni") {
    CHECK(bonferroni(PVector::validate({0.02, 0.5, 0.5})) == Catch::Approx(0.06));
    CHECK(bonferroni(PVector::validate({0.5, 0.5})) == 1.0);
    CHECK(bonferroni(PVector::validate({0.0, 0.9})) == 0.0);
}

TEST_CASE("o_family") {
    auto p = PVector::validate({0.1, 0.2, 0.3, 0.4});
    CHECK(o_family(p, 2) == Catch::Approx(0.4));
    CHECK(o_family(PVector::validate({0.3, 0.7}), 2) == Catch::Approx(0.7));
    CHECK_THROWS_AS(o_family(p, 0), range_error);
    CHECK_THROWS_AS(o_family(p, 5), range_error);

    CounterRng rng(3, 3);
    for (int it = 0; it < 100; ++it) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.next_uniform();
        auto q = PVector::validate(v);
        CHECK(o_family(q, 1) == Catch::Approx(bonferroni(q)));
        CHECK(o_family(q, 4) == Catch::Approx(q.max()));
    }
}

TEST_CASE("simes and hommel") {
    auto p = PVector::validate({0.01, 0.04, 0.9});
    CHECK(simes(p) == Catch::Approx(0.03));
    CHECK(hommel(p) == Catch::Approx(0.055));

    // ramp vectors: S_K = K alpha
    for (int K : {3, 5, 10}) {
        double alpha = 0.001;
        std::vector<double> v;
        for (int k = 1; k <= K; ++k) v.push_back(k * alpha);
        CHECK(simes(PVector::validate(v)) == Catch::Approx(K * alpha));
    }

    CHECK(simes(PVector::validate({1.0, 1.0, 1.0})) == 1.0);
    CHECK(hommel(PVector::validate({0.2, 0.5})) == Catch::Approx(0.6));
    CHECK(hommel(PVector::validate({0.9, 0.95, 0.99})) == 1.0);
}

TEST_CASE("power_mean") {
    CHECK(power_mean(PVector::validate({0.5, 0.5}), -1.0) == Catch::Approx(0.5));
    CHECK(power_mean(PVector::validate({0.25, 1.0}), 0.0) == Catch::Approx(0.5));
    CHECK(power_mean(PVector::validate({0.0, 0.9}), -1.0) == 0.0);
    CHECK(power_mean(PVector::validate({0.1, 0.9}), -kInf) == 0.1);
    CHECK(power_mean(PVector::validate({0.1, 0.9}), kInf) == 0.9);
    // huge dynamic range stays finite through the log-space path
    CHECK(power_mean(PVector::validate({1e-300, 1.0}), -5.0) > 0.0);
}

TEST_CASE("m_family basics") {
    auto p = PVector::validate({0.1, 0.2, 0.3});
    CHECK(m_family(p, 1.0) == Catch::Approx(0.4));  // 2 * arithmetic mean
    CHECK(m_family(p, kInf) == Catch::Approx(0.3));
    double b0 = solve_m_coefficients(0.0, 3).b;
    CHECK(m_family(PVector::validate({0.2, 0.2, 0.2}), 0.0) ==
          Catch::Approx(std::min(b0 * 0.2, 1.0)));
    CHECK(m_family(p, -kInf) == Catch::Approx(bonferroni(p)));
}

TEST_CASE("simes is the pointwise floor of the symmetric methods") {
    const char* specs[] = {"bonferroni",  "hommel", "o:k=1",         "o:k=2",  "o:k=3",
                           "m:r=-1",      "m:r=0",  "m:r=1",         "m:r=-2", "m-star:r=-1",
                           "grid-harmonic"};
    CounterRng rng(11, 17);
    for (int K : {2, 3, 5, 10}) {
        for (int it = 0; it < 400; ++it) {
            std::vector<double> v(static_cast<std::size_t>(K));
            for (double& x : v) x = 1e-6 + (1.0 - 1e-6) * rng.next_uniform();
            auto p = PVector::validate(v);
            double floor = simes(p);
            for (const char* spec : specs) {
                auto m = MergeMethod::parse(spec);
                if ((m.kind == MergeMethod::Kind::o_family && m.k > K)) continue;
                if (m.kind == MergeMethod::Kind::m_star && K < 3) continue;
                INFO(spec << " K=" << K);
                REQUIRE(evaluate(m, p).p >= floor - 1e-12);
            }
        }
    }
}

TEST_CASE("M-family domination spot checks") {
    CounterRng rng(5, 5);
    // K-1 <= r < s: F_s dominates
    for (int it = 0; it < 2000; ++it) {
        std::vector<double> v(3);
        for (double& x : v) x = rng.next_uniform();
        auto p = PVector::validate(v);
        CHECK(m_family(p, 5.0) <= m_family(p, 2.0) + 1e-12);
    }
    // r < s < K-1: incomparable, exhibit both directions on the fixed grid
    auto verdict = m_family_domination(-1.0, 0.0, 3);
    CHECK(verdict.relation == DominationRelation::incomparable);
    REQUIRE(verdict.witnesses.size() == 2);
    {
        auto lt = PVector::validate(verdict.witnesses[0]);
        CHECK(m_family(lt, -1.0) < m_family(lt, 0.0) - 1e-12);
        auto gt = PVector::validate(verdict.witnesses[1]);
        CHECK(m_family(gt, 0.0) < m_family(gt, -1.0) - 1e-12);
    }
}
