#include <doctest.h>

#include <cmath>
#include <vector>

#include "borrow/sim.hpp"
#include "borrow/stats.hpp"

using namespace borrow;

namespace {

// E[expit(logit(p0) - s Z)], Z standard normal, by the trapezoid rule on [-10, 10].
double quadrature_rate(double p0, double s) {
    const double logit = std::log(p0 / (1 - p0));
    const int m = 20000;
    const double h = 20.0 / m;
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double z = -10.0 + k * h;
        const double f = std::exp(-0.5 * z * z) / std::sqrt(2 * std::acos(-1.0)) /
                         (1.0 + std::exp(s * z - logit));
        acc += (k == 0 || k == m) ? 0.5 * f : f;
    }
    return acc * h;
}

sim::ScenarioConfig small_normal(double delta, std::uint64_t seed) {
    sim::ScenarioConfig c;
    c.id = "t";
    c.n0 = 40;
    c.delta = delta;
    c.nsim = 200;
    c.nboot = 50;
    c.seed = seed;
    c.rules = {BorrowingRule{RuleKind::MaxML}, BorrowingRule{RuleKind::MinMSE}};
    return c;
}

}  // namespace

TEST_CASE("gen_normal moments") {
    Rng rng(1);
    const std::size_t n = 100000;
    const auto d = sim::gen_normal(n, 0.0, 5, 0.5, rng);
    const auto y = d.outcomes();
    CHECK(std::abs(stats::mean(y)) < 3 * 1.5 / std::sqrt(double(n)));
    CHECK(std::abs(stats::variance(y) / 2.25 - 1.0) < 0.02);
    REQUIRE(d.covariates());
    CHECK(d.covariates()->cols() == 5);
    CHECK(std::abs(stats::variance(d.covariates()->column(2)) - 1.0) < 0.02);

    const auto e = sim::gen_normal(n, 0.7, 0, 0.5, rng, SourceLabel::External);
    CHECK(std::abs(stats::mean(e.outcomes()) - 0.7) < 3 / std::sqrt(double(n)));
    CHECK(std::abs(stats::variance(e.outcomes()) - 1.0) < 0.02);
    CHECK(e.source() == SourceLabel::External);
    CHECK_FALSE(e.covariates());
}

TEST_CASE("generators are reproducible") {
    Rng a(7), b(7);
    CHECK(sim::gen_normal(50, 0.1, 3, 0.5, a).outcomes()[10] ==
          sim::gen_normal(50, 0.1, 3, 0.5, b).outcomes()[10]);
    Rng c(8), d(8);
    const auto x = sim::gen_binary(100, 0.1, 0.3, 2, 0.2, c);
    const auto y = sim::gen_binary(100, 0.1, 0.3, 2, 0.2, d);
    CHECK(std::equal(x.outcomes().begin(), x.outcomes().end(), y.outcomes().begin()));
}

TEST_CASE("gen_binary rates") {
    Rng rng(2);
    const std::size_t n = 100000;
    auto d = sim::gen_binary(n, 0.0, 0.2, 5, 0.0, rng);
    CHECK(d.kind() == OutcomeKind::Binary);
    CHECK(std::abs(stats::mean(d.outcomes()) - 0.2) < 3 * std::sqrt(0.2 * 0.8 / n));
    d = sim::gen_binary(n, 0.2, 0.2, 5, 0.0, rng, SourceLabel::External);
    CHECK(std::abs(stats::mean(d.outcomes()) - 0.4) < 3 * std::sqrt(0.4 * 0.6 / n));
    d = sim::gen_binary(n, 0.0, 0.2, 5, 0.2, rng);
    const double truth = quadrature_rate(0.2, std::sqrt(5.0) * 0.2);
    CHECK(std::abs(stats::mean(d.outcomes()) - truth) < 3 * std::sqrt(truth * (1 - truth) / n));
}

TEST_CASE("binary true rate agrees with quadrature") {
    CHECK(sim::binary_true_rate(0.2, 5, 0.0) == 0.2);
    CHECK(sim::binary_true_rate(0.3, 0, 0.2) == 0.3);
    for (double p0 : {0.2, 0.5}) {
        const double q = quadrature_rate(p0, std::sqrt(5.0) * 0.2);
        const double mc = sim::binary_true_rate(p0, 5, 0.2);
        CHECK(std::abs(mc - q) < 4 * std::sqrt(q * (1 - q) / 1e7));
    }
    CHECK(quadrature_rate(0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("student-t noise: heavy tails fading with df") {
    Rng rng(3);
    const std::size_t n = 100000;
    const double k3 = stats::excess_kurtosis(sim::gen_student_t(n, 0.0, 0, 0.5, 3.0, rng).outcomes());
    const double k8 = stats::excess_kurtosis(sim::gen_student_t(n, 0.0, 0, 0.5, 8.0, rng).outcomes());
    const double k200 = stats::excess_kurtosis(sim::gen_student_t(n, 0.0, 0, 0.5, 200.0, rng).outcomes());
    const double kn = stats::excess_kurtosis(sim::gen_normal(n, 0.0, 0, 0.5, rng).outcomes());
    CHECK(k3 > 2.0);
    CHECK(k8 > k200);
    CHECK(std::abs(k200 - kn) < 0.1);
    CHECK_THROWS_AS(sim::gen_student_t(10, 0.0, 0, 0.5, 2.0, rng), Error);
}

TEST_CASE("scenario validation") {
    auto c = small_normal(0.0, 1);
    CHECK(c.problems().empty());
    c.outcome = sim::OutcomeFamily::Binary;
    c.p0 = 0.9;
    c.delta = 0.2;
    CHECK_FALSE(c.problems().empty());
    CHECK_THROWS_AS(c.validate(), Error);
    c = small_normal(0.0, 1);
    c.outcome = sim::OutcomeFamily::StudentT;
    c.df = 2.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small_normal(0.0, 1);
    c.rules.clear();
    CHECK_THROWS_AS(sim::run_scenario(c), Error);
}

TEST_CASE("run_scenario is deterministic and thread-count independent") {
    auto c = small_normal(0.2, 11);
    c.threads = 1;
    const auto a = sim::run_scenario(c);
    c.threads = 4;
    const auto b = sim::run_scenario(c);
    REQUIRE(a.rows.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(a.rows[r].mse == b.rows[r].mse);
        CHECK(a.rows[r].coverage_percentile == b.rows[r].coverage_percentile);
        CHECK(a.errors[r] == b.errors[r]);
    }
    c.seed = 12;
    CHECK(sim::run_scenario(c).rows[0].mse != a.rows[0].mse);
}

TEST_CASE("metrics invariants") {
    for (auto family : {sim::OutcomeFamily::Normal, sim::OutcomeFamily::Binary,
                        sim::OutcomeFamily::StudentT}) {
        auto c = small_normal(0.1, 13);
        c.outcome = family;
        c.cap = 0.5;
        const auto res = sim::run_scenario(c);
        for (const auto& row : res.rows) {
            CHECK(row.mean_a <= 0.5);
            CHECK(row.variance >= 0.0);
            CHECK(row.mse >= 0.0);
            CHECK(row.coverage_normal >= 0.0);
            CHECK(row.coverage_normal <= 1.0);
            CHECK(row.coverage_percentile >= 0.0);
            CHECK(row.coverage_percentile <= 1.0);
            CHECK(row.se_coverage_percentile <= std::sqrt(0.25 / c.nsim) + 1e-15);
            const double m = static_cast<double>(c.nsim - row.failures);
            // mean squared error decomposes exactly into (m - 1)/m var + bias^2
            CHECK(row.mse == doctest::Approx((m - 1) / m * row.variance + row.bias * row.bias)
                                 .epsilon(1e-10));
            CHECK(row.truth_source == (family == sim::OutcomeFamily::Binary ? "mc-oracle" : "exact"));
        }
    }
}

TEST_CASE("no-borrowing variance matches the analytic benchmark") {
    auto c = small_normal(0.0, 14);
    c.n0 = 50;
    c.nsim = 4000;
    c.nboot = 0;
    c.rules = {BorrowingRule{RuleKind::None}};
    const auto res = sim::run_scenario(c);
    const auto& row = res.rows[0];
    CHECK(row.nob_benchmark == doctest::Approx(2.25 / 50));
    CHECK(std::abs(row.nob_variance - row.nob_benchmark) <
          3 * row.nob_benchmark * std::sqrt(2.0 / (c.nsim - 1)));
    CHECK(std::isnan(row.coverage_normal));
    // the no-borrowing rule reproduces the reference exactly
    CHECK(row.mse == doctest::Approx(row.nob_mse).epsilon(1e-12));
}

TEST_CASE("paired MSE difference SE") {
    const std::vector<double> a = {1, 2, 3}, b = {1, 1, 1};
    // squared-error differences 0, 3, 8: variance 49/3, so SE = sqrt(49/3)/sqrt(3) = 7/3
    CHECK(sim::paired_mse_diff_se(a, b) == doctest::Approx(7.0 / 3));
    CHECK_THROWS_AS(sim::paired_mse_diff_se(a, {1.0}), Error);
}
