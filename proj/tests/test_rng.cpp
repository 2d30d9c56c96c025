// Determinism and distribution sanity for the seeded generator. The exact
// stream is part of the reproducibility contract, so a few leading values
// are frozen.

#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "hfl/rng.hpp"

using hfl::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed, same stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    Rng c(123), d(124);
    bool all_equal = true;
    for (int i = 0; i < 20; ++i) all_equal = all_equal && c.uniform() == d.uniform();
    CHECK_FALSE(all_equal);
}

TEST_CASE("frozen leading values") {
    // Locks the raw-draw conversion; a change here breaks every recorded run.
    Rng r(1);
    CHECK(r.uniform() == doctest::Approx(0.13387664401253263).epsilon(1e-15));
    Rng s(1);
    CHECK(s.integer(1000) < 1000);
}

TEST_CASE("uniform range and mean") {
    Rng r(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("bounded integers cover the range") {
    Rng r(9);
    std::set<std::uint64_t> seen;
    double sum = 0.0;
    for (int i = 0; i < 60000; ++i) {
        const auto v = r.integer(6);
        REQUIRE(v < 6);
        seen.insert(v);
        sum += static_cast<double>(v);
    }
    CHECK(seen.size() == 6);
    CHECK(sum / 60000 == doctest::Approx(2.5).epsilon(0.02));
    Rng one(3);
    for (int i = 0; i < 10; ++i) CHECK(one.integer(1) == 0);
}

TEST_CASE("normal moments") {
    Rng r(21);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derived streams differ per tag") {
    const auto s1 = hfl::mix_seed(42, 1);
    const auto s2 = hfl::mix_seed(42, 2);
    const auto s3 = hfl::mix_seed(43, 1);
    CHECK(s1 != s2);
    CHECK(s1 != s3);
    CHECK(hfl::mix_seed(42, 1, 2) != hfl::mix_seed(42, 2, 1));
    CHECK(hfl::mix_seed(42, 1, 2, 3) == hfl::mix_seed(42, 1, 2, 3));
}

}  // TEST_SUITE
