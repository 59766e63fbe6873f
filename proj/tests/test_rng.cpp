#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fedcarbon/rng.hpp"

using namespace fedcarbon;

TEST_CASE("rng: same seed, same sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: uniform stays in [0, 1)") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rng: uniform_int bounds and rough uniformity") {
    Rng rng(3);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 100000; ++i) {
        const auto v = rng.uniform_int(10);
        REQUIRE(v < 10);
        hits[static_cast<std::size_t>(v)] += 1;
    }
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("rng: normal moments") {
    Rng rng(11);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("rng: gamma mean matches alpha") {
    for (double alpha : {0.5, 2.0, 10.0, 1e6}) {
        Rng rng(17);
        double sum = 0.0;
        const int n = alpha >= 1e5 ? 2000 : 50000;
        for (int i = 0; i < n; ++i) sum += rng.gamma(alpha);
        CHECK(std::abs(sum / n - alpha) / alpha < 0.05);
    }
}

TEST_CASE("rng: dirichlet sums to one") {
    Rng rng(5);
    const auto p = rng.dirichlet(10.0, 30);
    CHECK(p.size() == 30);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    for (double v : p) CHECK(v >= 0.0);
}

TEST_CASE("rng: shuffle is a permutation") {
    Rng rng(9);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("rng: derived streams differ per tag") {
    const auto a = derive_seed(1, 2, 3, 4);
    CHECK(a == derive_seed(1, 2, 3, 4));
    CHECK(a != derive_seed(1, 2, 3, 5));
    CHECK(a != derive_seed(1, 2, 4, 4));
    CHECK(a != derive_seed(2, 2, 3, 4));
}
