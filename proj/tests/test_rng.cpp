#include <doctest.h>

#include <cmath>

#include "gfarfe/rng.hpp"

using namespace gfarfe;

TEST_CASE("streams are reproducible and tag-separated") {
    Rng a(42, 7, "trajectory");
    Rng b(42, 7, "trajectory");
    Rng c(42, 7, "bootstrap");
    bool same = true, differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        same = same && (va == b.next_u64());
        differs = differs || (va != c.next_u64());
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("uniform doubles live in [0,1) with sane mean") {
    Rng rng(1, 0, "unit");
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / 20000 - 0.5) < 0.01);
}

TEST_CASE("normal moments") {
    Rng rng(3, 0, "normal");
    double sum = 0.0, sum2 = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sum2 / n - 1.0) < 0.03);
}

TEST_CASE("gamma mean matches shape") {
    for (double shape : {0.5, 1.0, 3.7}) {
        Rng rng(5, static_cast<std::uint64_t>(shape * 10), "gamma");
        double sum = 0.0;
        const int n = 40000;
        for (int i = 0; i < n; ++i) sum += rng.next_gamma(shape);
        CHECK(std::abs(sum / n - shape) < 0.05 * shape + 0.02);
    }
}

TEST_CASE("next_below covers the range uniformly") {
    Rng rng(9, 0, "below");
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.next_below(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("dirichlet simplex and dimension one") {
    Rng rng(11, 0, "dir");
    const auto v = rng.next_dirichlet(2.5, 4);
    double sum = 0.0;
    for (double x : v) {
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rng.next_dirichlet(1.0, 1) == std::vector<double>{1.0});
}
