#include <doctest.h>

#include <cmath>

#include "prunelab/rng.hpp"

using namespace prunelab;

TEST_CASE("identical (seed, stream) replays identical draws") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams decorrelate") {
    RngStream a(42, 0), b(42, 1);
    int equal = 0;
    for (int i = 0; i < 1000; ++i)
        equal += a.next_u64() == b.next_u64() ? 1 : 0;
    CHECK(equal == 0);
}

TEST_CASE("unit draws stay in [0,1) and average near 1/2") {
    RngStream rng(1, 0);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.next_unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / 100000 - 0.5) < 0.005);
}

TEST_CASE("gaussian moments") {
    RngStream rng(3, 0);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("next_below is bounded and roughly uniform") {
    RngStream rng(9, 2);
    int counts[7] = {0};
    for (int i = 0; i < 70000; ++i) {
        const auto v = rng.next_below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts)
        CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("random_permutation permutes") {
    RngStream rng(5, 5);
    const auto perm = random_permutation(10, rng);
    REQUIRE(perm.size() == 10);
    bool seen[10] = {false};
    for (int v : perm) {
        REQUIRE(v >= 0);
        REQUIRE(v < 10);
        seen[v] = true;
    }
    for (bool s : seen)
        CHECK(s);
}

TEST_CASE("substream derivation is deterministic") {
    RngStream a(11, 3);
    RngStream c1 = a.substream(99);
    RngStream c2 = RngStream(11, 3).substream(99);
    for (int i = 0; i < 100; ++i)
        REQUIRE(c1.next_u64() == c2.next_u64());
}
