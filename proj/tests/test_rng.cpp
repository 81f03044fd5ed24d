#include <doctest.h>

#include <cmath>
#include <set>

#include "lad/rng.hpp"

using lad::rng::Stream;

TEST_SUITE_BEGIN("rng");

TEST_CASE("draws are pure functions of (seed, stream, counter)") {
    Stream a(42, "scenes");
    Stream b(42, "scenes");
    for (std::uint64_t c = 0; c < 100; ++c) CHECK(a.bits(c) == b.bits(c));
    CHECK(a.uniform(7) == b.uniform(7));
    CHECK(a.normal(7) == b.normal(7));
}

TEST_CASE("different streams and seeds decorrelate") {
    Stream a(42, "scenes");
    Stream b(42, "noise");
    Stream c(43, "scenes");
    CHECK(a.bits(0) != b.bits(0));
    CHECK(a.bits(0) != c.bits(0));
    CHECK(a.fork(1).bits(0) != a.fork(2).bits(0));
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
    Stream s(1, "t");
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t c = 0; c < 10000; ++c) {
        const double u = s.uniform(c);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_int is in range and roughly balanced") {
    Stream s(7, "t");
    int counts[5] = {0, 0, 0, 0, 0};
    for (std::uint64_t c = 0; c < 50000; ++c) {
        const auto v = s.uniform_int(c, 5);
        REQUIRE(v < 5);
        ++counts[v];
    }
    for (int k : counts) CHECK(std::abs(k - 10000) < 500);
}

TEST_CASE("normal moments") {
    Stream s(11, "t");
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int c = 0; c < n; ++c) {
        const double x = s.normal(c);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_SUITE_END();
