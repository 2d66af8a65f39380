#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmerge/coefficients.hpp"
#include "pmerge/util.hpp"

using namespace pmerge;

// Independent oracle values frozen from a bisection run against the raw
// branch equations (cross-checked in extended precision), plus the two
// closed-form families
//   c_{-2,K} = 1/(2(K-1)),  b_{-2,K} = 2 sqrt(K-1)
//   c_{-1/2,K} = 1/(K(K-1)), b_{-1/2,K} = 4(K-1)/K
// obtained by eliminating the integral from the root equation.

TEST_CASE("closed-form roots for r=-2 and r=-1/2") {
    for (int K : {3, 5, 10, 100}) {
        const auto& c2 = solve_m_coefficients(-2.0, K);
        CHECK(c2.c == Catch::Approx(1.0 / (2.0 * (K - 1))).epsilon(1e-13));
        CHECK(c2.b == Catch::Approx(2.0 * std::sqrt(K - 1.0)).epsilon(1e-13));

        const auto& ch = solve_m_coefficients(-0.5, K);
        CHECK(ch.c == Catch::Approx(1.0 / (static_cast<double>(K) * (K - 1))).epsilon(1e-12));
        CHECK(ch.b == Catch::Approx(4.0 * (K - 1.0) / K).epsilon(1e-13));
    }
}

TEST_CASE("frozen oracle values K=3") {
    const auto& cm1 = solve_m_coefficients(-1.0, 3);
    CHECK(cm1.c == Catch::Approx(0.20759979091018663).epsilon(1e-12));
    CHECK(cm1.b == Catch::Approx(2.7456435767327236).epsilon(1e-12));

    const auto& c0 = solve_m_coefficients(0.0, 3);
    CHECK(c0.c == Catch::Approx(0.09454157778810411).epsilon(1e-12));
    CHECK(c0.b == Catch::Approx(2.5243031170299015).epsilon(1e-12));

    const auto& cm5 = solve_m_coefficients(-5.0, 3);
    CHECK(cm5.c == Catch::Approx(0.29238513211233585).epsilon(1e-12));
}

TEST_CASE("closed forms for r >= 1/(K-1) and limits") {
    CHECK(solve_m_coefficients(1.0, 3).b == Catch::Approx(2.0));
    CHECK(solve_m_coefficients(1.0, 3).c == 0.0);
    CHECK(solve_m_coefficients(-kInf, 5).b == 5.0);
    CHECK(solve_m_coefficients(kInf, 5).b == 1.0);
    CHECK(solve_m_coefficients(0.5, 2).b == Catch::Approx(2.0));  // b_{r,2}=2 for r<1
    CHECK(solve_m_coefficients(3.0, 10).b == Catch::Approx(std::pow(4.0, 1.0 / 3.0)));
    // r >= K-1 caps at K
    CHECK(solve_m_coefficients(12.0, 5).b == Catch::Approx(std::pow(5.0, 1.0 / 12.0)));
}

TEST_CASE("branch equation residuals and bracket") {
    for (int K : {3, 5, 10, 100}) {
        for (double r : {-5.0, -2.0, -1.0, -0.5, 0.0, 0.2}) {
            const auto& c = solve_m_coefficients(r, K);
            INFO("r=" << r << " K=" << K);
            CHECK(std::abs(c.residual) <= 1e-12);
            if (r < 1.0 / (K - 1)) {
                CHECK(c.c > 0.0);
                CHECK(c.c < 1.0 / K);
            } else {
                CHECK(c.c == 0.0);
            }
            CHECK(c.d == Catch::Approx(1.0 - (K - 1.0) * c.c).margin(1e-15));
            CHECK(c.d > 1.0 / K);
            CHECK(c.d <= 1.0);
            CHECK(c.b >= 1.0);
        }
    }
}

TEST_CASE("coefficient ordering for r<s, rs>0") {
    const double rs[] = {-5.0, -2.0, -1.0, -0.5, -0.25};
    for (int K : {3, 5, 10, 100}) {
        for (std::size_t i = 0; i < std::size(rs); ++i) {
            for (std::size_t j = i + 1; j < std::size(rs); ++j) {
                double r = rs[i], s = rs[j];
                double br = solve_m_coefficients(r, K).b;
                double bs = solve_m_coefficients(s, K).b;
                INFO("K=" << K << " r=" << r << " s=" << s);
                CHECK(std::pow(K, 1.0 / s - 1.0 / r) * br <= bs + 1e-9);
                CHECK(bs <= br + 1e-9);
            }
        }
        // a positive pair
        double b1 = solve_m_coefficients(0.25, K).b;
        double b2 = solve_m_coefficients(0.75, K).b;
        CHECK(std::pow(K, 1.0 / 0.75 - 1.0 / 0.25) * b1 <= b2 + 1e-9);
        CHECK(b2 <= b1 + 1e-9);
    }
}

TEST_CASE("harmonic coefficient asymptotics") {
    // b_{-1,K} ~ log K (slow convergence, loose band)
    for (int K : {100, 1000, 10000}) {
        double b = solve_m_coefficients(-1.0, K).b;
        double ratio = b / std::log(static_cast<double>(K));
        INFO("K=" << K << " b=" << b);
        CHECK(ratio >= 0.9);
        CHECK(ratio <= 1.9);
    }
    // c_{-1} ~ 1/(K log K)
    const int K = 1000000;
    double c = solve_m_coefficients(-1.0, K).c;
    double scaled = c * K * std::log(static_cast<double>(K));
    CHECK(scaled >= 0.5);
    CHECK(scaled <= 2.0);
}
