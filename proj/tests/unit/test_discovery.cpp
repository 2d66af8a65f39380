#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmerge/discovery.hpp"
#include "pmerge/rng.hpp"

using namespace pmerge;

namespace {

// Brute force over all nonempty subsets I with |R \ I| < j, where R indexes
// the l smallest p-values. Independent of the engine paths.
double brute_force_dm(const PVector& p, const MergeMethod& fam, int l, int j) {
    const int K = p.k();
    auto s = p.sorted();
    double best = 0.0;
    for (unsigned mask = 1; mask < (1u << K); ++mask) {
        int missing = 0;  // |R \ I|
        for (int u = 0; u < l; ++u)
            if (!(mask & (1u << u))) ++missing;
        if (missing >= j) continue;
        std::vector<double> sub;
        for (int u = 0; u < K; ++u)
            if (mask & (1u << u)) sub.push_back(s[static_cast<std::size_t>(u)]);
        best = std::max(best, evaluate_arity(fam, sub));
    }
    return best;
}

// Restricted oracle: only sets {j..l} u {i..K} with the running-max fix.
double restricted_dm(const PVector& p, const MergeMethod& fam, int l, int j) {
    const int K = p.k();
    auto s = p.sorted();
    double best = 0.0;
    for (int jj = 1; jj <= j; ++jj) {
        for (int i = l + 1; i <= K + 1; ++i) {
            std::vector<double> sub;
            for (int u = jj; u <= l; ++u) sub.push_back(s[static_cast<std::size_t>(u - 1)]);
            for (int u = i; u <= K; ++u) sub.push_back(s[static_cast<std::size_t>(u - 1)]);
            best = std::max(best, evaluate_arity(fam, sub));
        }
    }
    return best;
}

const char* kFamilies[] = {"bonferroni", "simes",       "hommel",
                           "m:r=-1",     "m-star:r=-1", "grid-harmonic"};

}  // namespace

TEST_CASE("hand example: bonferroni row") {
    auto p = PVector::validate({0.001, 1.0, 1.0});
    auto dm = discovery_matrix(p, MergeMethod::parse("bonferroni"), 1);
    CHECK(dm.at(1, 1) == Catch::Approx(0.003));
}

TEST_CASE("all-ones input gives an all-ones matrix") {
    auto p = PVector::validate({1.0, 1.0, 1.0, 1.0});
    for (const char* f : kFamilies) {
        auto dm = discovery_matrix(p, MergeMethod::parse(f), 4);
        for (int l = 1; l <= 4; ++l)
            for (int j = 1; j <= l; ++j) {
                INFO(f);
                REQUIRE(dm.at(l, j) == 1.0);
            }
    }
}

TEST_CASE("simes family corner cell is the plain merge") {
    CounterRng rng(21, 0);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> v(6);
        for (double& x : v) x = rng.next_uniform();
        auto p = PVector::validate(v);
        auto dm = discovery_matrix(p, MergeMethod::parse("simes"), 6);
        // (l=K, j=1): only I = full set
        CHECK(dm.at(6, 1) == Catch::Approx(simes(p)).margin(1e-12));
    }
}

TEST_CASE("engines match the restricted and full brute-force oracles, K <= 7") {
    const char* extended[] = {"bonferroni",   "simes",  "hommel",     "m:r=-1",
                              "m-star:r=-1",  "grid-harmonic",        "m:r=0.5",
                              "m-star:r=0",   "m-star:r=0.5",         "o:k=2",
                              "o-star:k=2"};
    CounterRng rng(22, 0);
    for (const char* f : extended) {
        auto fam = MergeMethod::parse(f);
        for (int K : {4, 6, 7}) {
            for (int rep = 0; rep < 6; ++rep) {
                std::vector<double> v(static_cast<std::size_t>(K));
                for (double& x : v) x = 0.001 + 0.999 * rng.next_uniform();
                // throw in duplicates to exercise tie handling
                if (rep % 2 == 0 && K >= 3) v[1] = v[0];
                if (rep == 5) v[static_cast<std::size_t>(K - 1)] = 1.2;  // above-1 entry
                if (rep == 3) v[0] = 0.0;  // a zero: excluded once j >= 2
                auto p = PVector::validate(v);
                auto dm = discovery_matrix(p, fam, K);
                for (int l = 1; l <= K; ++l)
                    for (int j = 1; j <= l; ++j) {
                        INFO(f << " K=" << K << " l=" << l << " j=" << j);
                        REQUIRE(dm.at(l, j) ==
                                Catch::Approx(restricted_dm(p, fam, l, j)).margin(1e-12));
                        REQUIRE(dm.at(l, j) ==
                                Catch::Approx(brute_force_dm(p, fam, l, j)).margin(1e-12));
                    }
            }
        }
    }
}

TEST_CASE("constant vectors: every engine agrees with brute force under total ties") {
    auto p = PVector::validate({0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
    const char* fams[] = {"bonferroni", "simes", "hommel", "m:r=-1", "m-star:r=-1",
                          "grid-harmonic", "o:k=2"};
    for (const char* f : fams) {
        auto fam = MergeMethod::parse(f);
        auto dm = discovery_matrix(p, fam, 6);
        for (int l = 1; l <= 6; ++l)
            for (int j = 1; j <= l; ++j) {
                INFO(f << " l=" << l << " j=" << j);
                REQUIRE(dm.at(l, j) == Catch::Approx(brute_force_dm(p, fam, l, j)).margin(1e-12));
            }
    }
}

TEST_CASE("rows are nondecreasing in j and cells nonincreasing in l empirically") {
    CounterRng rng(23, 0);
    for (const char* f : kFamilies) {
        auto fam = MergeMethod::parse(f);
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> v(10);
            for (double& x : v) x = rng.next_uniform();
            auto p = PVector::validate(v);
            auto dm = discovery_matrix(p, fam, 10);
            for (int l = 1; l <= 10; ++l)
                for (int j = 2; j <= l; ++j) REQUIRE(dm.at(l, j) >= dm.at(l, j - 1));
            for (int l = 2; l <= 10; ++l)
                for (int j = 1; j < l; ++j) {
                    INFO(f << " l=" << l << " j=" << j);
                    REQUIRE(dm.at(l, j) <= dm.at(l - 1, j) + 1e-12);
                }
        }
    }
}

namespace {

// raw DM'_{l,j} (no running max): max over suffix starts only
double raw_dm_prime(const PVector& p, const MergeMethod& fam, int l, int j) {
    const int K = p.k();
    auto s = p.sorted();
    double best = 0.0;
    for (int i = l + 1; i <= K + 1; ++i) {
        std::vector<double> sub;
        for (int u = j; u <= l; ++u) sub.push_back(s[static_cast<std::size_t>(u - 1)]);
        for (int u = i; u <= K; ++u) sub.push_back(s[static_cast<std::size_t>(u - 1)]);
        best = std::max(best, evaluate_arity(fam, sub));
    }
    return best;
}

}  // namespace

TEST_CASE("bonferroni DM-prime can dip in j while DM never does") {
    // DM'_{l,j} = (K-j+1) s_j ^ 1 dips when s_j grows slower than the
    // multiplier shrinks
    auto p = PVector::validate({0.1, 0.1001, 0.5});
    auto fam = MergeMethod::parse("bonferroni");
    double d1 = raw_dm_prime(p, fam, 2, 1);
    double d2 = raw_dm_prime(p, fam, 2, 2);
    CHECK(d1 == Catch::Approx(0.3));
    CHECK(d2 == Catch::Approx(0.2002));
    CHECK(d2 < d1);  // the dip
    auto dm = discovery_matrix(p, fam, 2);
    CHECK(dm.at(2, 1) == Catch::Approx(d1));
    CHECK(dm.at(2, 2) == Catch::Approx(d1));  // running max repairs the row
}

TEST_CASE("smaller inputs never increase the matrix") {
    CounterRng rng(24, 0);
    auto fam = MergeMethod::parse("grid-harmonic");
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> v(6), w(6);
        for (std::size_t i = 0; i < 6; ++i) {
            v[i] = rng.next_uniform();
            w[i] = v[i] * rng.next_uniform();  // componentwise smaller
        }
        auto dm1 = discovery_matrix(PVector::validate(v), fam, 6);
        auto dm2 = discovery_matrix(PVector::validate(w), fam, 6);
        for (std::size_t c = 0; c < dm1.cells.size(); ++c)
            REQUIRE(dm2.cells[c] <= dm1.cells[c] + 1e-12);
    }
}

TEST_CASE("ties: permuting tied entries does not change the matrix") {
    auto p1 = PVector::validate({0.2, 0.2, 0.2, 0.5, 0.7});
    auto p2 = PVector::validate({0.2, 0.5, 0.2, 0.7, 0.2});
    for (const char* f : kFamilies) {
        auto fam = MergeMethod::parse(f);
        auto dm1 = discovery_matrix(p1, fam, 5);
        auto dm2 = discovery_matrix(p2, fam, 5);
        for (std::size_t c = 0; c < dm1.cells.size(); ++c) {
            INFO(f);
            REQUIRE(dm1.cells[c] == Catch::Approx(dm2.cells[c]).margin(1e-14));
        }
    }
}

TEST_CASE("mid-size K=30: fast engines match the restricted oracle") {
    CounterRng rng(26, 0);
    std::vector<double> v(30);
    for (double& x : v) x = 0.0005 + 0.9995 * rng.next_uniform();
    v[4] = v[3];  // a tie
    auto p = PVector::validate(v);
    for (const char* f : {"simes", "hommel", "m:r=-1", "m-star:r=-1", "m-star:r=0.5",
                          "grid-harmonic", "o:k=2"}) {
        auto fam = MergeMethod::parse(f);
        auto dm = discovery_matrix(p, fam, 30);
        for (int l = 1; l <= 30; l += 3)
            for (int j = 1; j <= l; j += 2) {
                INFO(f << " l=" << l << " j=" << j);
                REQUIRE(dm.at(l, j) == Catch::Approx(restricted_dm(p, fam, l, j)).margin(1e-11));
            }
    }
}

TEST_CASE("production scale K=1000: engine cells match the restricted oracle") {
    CounterRng rng(27, 0);
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) {
        // skewed sample: a cluster of small values plus a uniform bulk
        double u = rng.next_uniform();
        v[i] = (i < 40) ? 1e-5 * (1.0 + 100.0 * u) : u;
    }
    auto p = PVector::validate(v);
    const int cells[][2] = {{1, 1}, {20, 7}, {40, 2}, {40, 11}};
    for (const char* f : {"simes", "hommel", "m:r=-1", "m-star:r=-1"}) {
        auto fam = MergeMethod::parse(f);
        auto dm = discovery_matrix(p, fam, 40);
        for (auto [l, j] : cells) {
            INFO(f << " l=" << l << " j=" << j);
            REQUIRE(dm.at(l, j) == Catch::Approx(restricted_dm(p, fam, l, j)).margin(1e-10));
        }
    }
}

TEST_CASE("report: how often the running-max correction changes a cell") {
    // the corrected matrix usually equals the raw one; measured, not asserted
    CounterRng rng(25, 0);
    for (const char* f : kFamilies) {
        auto fam = MergeMethod::parse(f);
        long cells = 0, changed = 0;
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> v(8);
            for (double& x : v) x = rng.next_uniform();
            auto p = PVector::validate(v);
            auto dm = discovery_matrix(p, fam, 8);
            for (int l = 1; l <= 8; ++l)
                for (int j = 1; j <= l; ++j) {
                    ++cells;
                    if (std::abs(dm.at(l, j) - raw_dm_prime(p, fam, l, j)) > 1e-12) ++changed;
                }
        }
        if (changed > 0)
            WARN(std::string(f) << ": running max changed " << changed << "/" << cells
                                << " cells");
    }
    SUCCEED();
}

TEST_CASE("categorize and the discovery lower bound") {
    DiscoveryMatrix dm;
    dm.corner = 3;
    dm.K = 3;
    dm.cells = {0.004, 0.004, 0.03, 0.004, 0.03, 0.2};
    std::vector<double> alphas{0.01, 0.05};
    auto buckets = categorize(dm, alphas);
    CHECK(buckets[DiscoveryMatrix::index(1, 1)] == 0);
    CHECK(buckets[DiscoveryMatrix::index(2, 2)] == 1);
    CHECK(buckets[DiscoveryMatrix::index(3, 3)] == 2);

    CHECK(true_discovery_lower_bound(dm, 3, 0.05) == 2);
    CHECK(true_discovery_lower_bound(dm, 3, 0.001) == 0);
    CHECK(true_discovery_lower_bound(dm, 3, 0.01) <= true_discovery_lower_bound(dm, 3, 0.05));
}

TEST_CASE("arity errors surface for undefined families") {
    auto p = PVector::validate({0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_AS(discovery_matrix(p, MergeMethod::parse("o:k=3"), 4), arity_error);
    CHECK_THROWS_AS(discovery_matrix(p, MergeMethod::parse("m-star:r=2.5"), 4), arity_error);
}
