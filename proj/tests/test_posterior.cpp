#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "borrow/posterior.hpp"

using namespace borrow;

TEST_CASE("combine examples") {
    CHECK(combine(0.3, 0.9, 0.0) == 0.3);
    CHECK(combine(0.0, 1.0, 1.0) == doctest::Approx(0.5));
    CHECK(combine(0.2, 0.5, 0.25) == doctest::Approx(0.26));
    CHECK_THROWS_AS(combine(0.0, 1.0, -0.1), Error);

    const auto c = combine(SummaryStats{10, 0.2, 0.02}, SummaryStats{10, 0.5, 0.01}, 0.25);
    CHECK(c.mu_c == doctest::Approx(0.26));
    CHECK(c.a == 0.25);
}

TEST_CASE("mse_profile examples") {
    auto m = mse_profile(0.0, 0.02, 0.01, 0.3);
    CHECK(m.variance == doctest::Approx(0.02));
    CHECK(m.bias == 0.0);
    CHECK(m.mse == doctest::Approx(0.02));
    m = mse_profile(1.0, 1.0, 1.0, 0.0);
    CHECK(m.variance == doctest::Approx(0.5));
    CHECK(m.mse == doctest::Approx(0.5));
    m = mse_profile(0.2, 0.02, 0.01, 0.3);
    CHECK(m.mse == doctest::Approx(0.024 / 1.44));
    CHECK(m.bias == doctest::Approx(0.2 * 0.3 / 1.2));
}

TEST_CASE("mse = variance + eta^2 bias^2") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double a = u(rng), v0 = u(rng), v1 = u(rng), d = u(rng), eta = u(rng);
        const auto m = mse_profile(a, v0, v1, d, eta);
        CHECK(m.mse == doctest::Approx(m.variance + eta * eta * m.bias * m.bias).epsilon(1e-12));
    }
}

TEST_CASE("optimal_a examples") {
    CHECK(optimal_a(0.5, 0.5, 0.0) == doctest::Approx(1.0));
    CHECK(optimal_a(0.02, 0.01, 0.3) == doctest::Approx(0.2));
    CHECK(optimal_a(1.0, 1.0, 1e8) < 1e-15);
    CHECK_THROWS_AS(optimal_a(1.0, 0.0, 0.0), Error);
}

TEST_CASE("optimal_a matches grid minimization of the MSE") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> var(0.05, 1.0), d(0.0, 3.0);
    const double etas[] = {0.0, 0.5, 1.0, 2.0};
    for (int rep = 0; rep < 100; ++rep) {
        const double v0 = var(rng), v1 = var(rng), delta = d(rng), eta = etas[rep % 4];
        const double a_star = optimal_a(v0, v1, delta, eta);
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 10000; ++k) {
            best = std::min(best, mse_profile(k * 0.001, v0, v1, delta, eta).mse);
        }
        CHECK(mse_profile(a_star, v0, v1, delta, eta).mse <= best + 1e-12);
    }
}

TEST_CASE("derivative of the MSE vanishes at the optimum") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> var(0.05, 1.0), d(0.0, 3.0);
    const double h = 1e-5;
    for (int rep = 0; rep < 200; ++rep) {
        const double v0 = var(rng), v1 = var(rng), delta = d(rng);
        const double a = optimal_a(v0, v1, delta);
        const double slope =
            (mse_profile(a + h, v0, v1, delta).mse - mse_profile(a - h, v0, v1, delta).mse) / (2 * h);
        CHECK(std::abs(slope) < 1e-6);
    }
}

TEST_CASE("bias_at_optimum") {
    CHECK(bias_at_optimum(1.0, 1.0, 0.0) == 0.0);
    CHECK(bias_at_optimum(1.0, 1.0, std::sqrt(2.0)) == doctest::Approx(std::sqrt(2.0) / 4));
    CHECK(bias_at_optimum(1.0, 1.0, 1e6) == doctest::Approx(1e-6).epsilon(1e-5));
    // equals the bias of mse_profile evaluated at optimal_a
    CHECK(bias_at_optimum(0.3, 0.7, 1.1) ==
          doctest::Approx(mse_profile(optimal_a(0.3, 0.7, 1.1), 0.3, 0.7, 1.1).bias));
}

TEST_CASE("squared bias at the optimum peaks at delta^2 = total variance") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> var(0.01, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double v0 = var(rng), v1 = var(rng), total = v0 + v1;
        const double step = total / 200;
        double best = -1, arg = 0;
        for (int k = 1; k <= 2000; ++k) {
            const double d2 = k * step;
            const double b = bias_at_optimum(v0, v1, std::sqrt(d2));
            if (b * b > best) {
                best = b * b;
                arg = d2;
            }
        }
        CHECK(std::abs(arg - total) <= step);
    }
}

TEST_CASE("combine is a convex combination") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> m(-5, 5), a(0, 20);
    for (int rep = 0; rep < 1000; ++rep) {
        const double m0 = m(rng), m1 = m(rng), c = combine(m0, m1, a(rng));
        CHECK(c >= std::min(m0, m1) - 1e-12);
        CHECK(c <= std::max(m0, m1) + 1e-12);
    }
}

TEST_CASE("posterior_normal examples") {
    const SummaryStats s0{10, 0.2, 0.02}, s1{10, 0.5, 0.01};
    auto p = posterior_normal(s0, s1, 0.0);
    CHECK(p.mean == doctest::Approx(0.2));
    CHECK(p.variance == doctest::Approx(0.02));
    p = posterior_normal(s0, s1, 0.5);
    CHECK(p.variance == doctest::Approx(0.01));
    CHECK(p.mean == doctest::Approx(0.35));
    p = posterior_normal({10, 1.0, 0.04}, {10, 2.0, 0.04}, 1.0);
    CHECK(p.mean == doctest::Approx(1.5));
    CHECK(p.variance == doctest::Approx(0.02));
    CHECK_THROWS_AS(posterior_normal(s0, s1, 1.5), Error);
    CHECK_THROWS_AS(posterior_normal(s0, {10, 0.5, 0.0}, 0.5), Error);
}

TEST_CASE("posterior_normal with a0 = a var1/var0 reproduces combine") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> var(0.01, 1.0), m(-2, 2), u(0, 1);
    for (int rep = 0; rep < 1000; ++rep) {
        const SummaryStats s0{50, m(rng), var(rng)}, s1{50, m(rng), var(rng)};
        const double a0 = u(rng);
        const double a = a0 * s0.var_of_mean / s1.var_of_mean;
        CHECK(posterior_normal(s0, s1, a0).mean ==
              doctest::Approx(combine(s0.mean, s1.mean, a)).epsilon(1e-12));
    }
}

TEST_CASE("posterior_binomial") {
    auto b = posterior_binomial(5, 10, 30, 40, 0.0);
    CHECK(b.alpha == 6.0);
    CHECK(b.beta == 6.0);
    b = posterior_binomial(5, 10, 30, 40, 1.0);
    CHECK(b.alpha == 36.0);
    CHECK(b.beta == 16.0);
    b = posterior_binomial(5, 10, 30, 40, 0.5);
    CHECK(b.alpha == 21.0);
    CHECK(b.beta == 11.0);
    CHECK(b.mean() == doctest::Approx(21.0 / 32));
    CHECK(b.variance() == doctest::Approx(21.0 * 11 / (32.0 * 32 * 33)));
}
