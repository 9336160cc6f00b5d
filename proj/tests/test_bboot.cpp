#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "borrow/bboot.hpp"
#include "borrow/posterior.hpp"
#include "borrow/stats.hpp"

using namespace borrow;

namespace {

ControlSample normal_sample(std::size_t n, double mean, std::uint64_t seed,
                            SourceLabel src = SourceLabel::Internal) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(mean, 1.0);
    std::vector<double> y(n);
    for (auto& v : y) v = z(rng);
    return ControlSample(std::move(y), OutcomeKind::Continuous, src);
}

ControlSample with_covariate(std::size_t n, double shift, std::uint64_t seed, SourceLabel src) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = z(rng) + shift;
        y[i] = 0.5 * x[i] + z(rng);
    }
    return ControlSample(std::move(y), OutcomeKind::Continuous, src, Covariates(n, 1, std::move(x)));
}

bboot::BootstrapConfig config(int B, std::uint64_t seed, RuleKind kind, double cap = 1.0) {
    bboot::BootstrapConfig cfg;
    cfg.B = B;
    cfg.seed = seed;
    cfg.rule = BorrowingRule{kind, 1.0, cap, 51};
    return cfg;
}

}  // namespace

TEST_CASE("dirichlet_weights") {
    Rng rng(1);
    CHECK(bboot::dirichlet_weights(1, rng) == std::vector<double>{1.0});
    for (std::size_t n : {2u, 7u, 100u, 5000u}) {
        const auto w = bboot::dirichlet_weights(n, rng);
        CHECK(w.size() == n);
        CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - n) < 1e-9);
        CHECK(std::all_of(w.begin(), w.end(), [](double v) { return v > 0; }));
    }
    const auto w = bboot::dirichlet_weights(100000, rng);
    CHECK(stats::mean(w) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(stats::variance(w) - 1.0) < 0.02);
}

TEST_CASE("run is reproducible and independent of the thread count") {
    const auto d0 = normal_sample(60, 0.0, 1);
    const auto d1 = normal_sample(80, 0.3, 2, SourceLabel::External);
    const auto dt = normal_sample(50, 1.0, 3);
    auto cfg = config(2, 99, RuleKind::MinMSE);
    const auto a = bboot::run(d0, d1, dt, cfg);
    const auto b = bboot::run(d0, d1, dt, cfg);
    CHECK(a.mu_c == b.mu_c);
    CHECK(a.a_star == b.a_star);
    CHECK(*a.tau == *b.tau);

    cfg.B = 300;
    cfg.threads = 1;
    const auto one = bboot::run(d0, d1, dt, cfg);
    cfg.threads = 5;
    const auto five = bboot::run(d0, d1, dt, cfg);
    CHECK(one.mu_c == five.mu_c);
    CHECK(one.a_star == five.a_star);
    CHECK(*one.tau == *five.tau);

    cfg.seed = 100;
    CHECK(bboot::run(d0, d1, dt, cfg).mu_c != one.mu_c);
}

TEST_CASE("run_rules shares weights across rules") {
    const auto d0 = normal_sample(40, 0.0, 4);
    const auto d1 = normal_sample(40, 0.2, 5, SourceLabel::External);
    auto cfg = config(50, 7, RuleKind::MinMSE);
    const BorrowingRule rules[] = {{RuleKind::MaxML, 1, 1, 51}, {RuleKind::MinMSE, 1, 1, 51}};
    const auto both = bboot::run_rules(d0, d1, std::nullopt, cfg, rules);
    cfg.rule = rules[1];
    CHECK(bboot::run(d0, d1, std::nullopt, cfg).mu_c == both[1].mu_c);
}

TEST_CASE("draw vectors share length B, respect the cap, and tau = mu_t - mu_c") {
    const auto d0 = normal_sample(30, 0.0, 6);
    const auto d1 = normal_sample(90, 0.0, 7, SourceLabel::External);
    const auto dt = normal_sample(30, 0.5, 8);
    for (RuleKind k : {RuleKind::MaxML, RuleKind::CMinMSE, RuleKind::MinMSE, RuleKind::Full}) {
        const auto pd = bboot::run(d0, d1, dt, config(400, 3, k, 0.5));
        CHECK(pd.size() == 400);
        CHECK(pd.a_star.size() == 400);
        CHECK(pd.tau->size() == 400);
        for (double a : pd.a_star) CHECK(a <= 0.5);
        CHECK(pd.point_a <= 0.5);
        CHECK(pd.capped_fraction() >= 0.0);
        CHECK(pd.capped_fraction() <= 1.0);
        // recompute mu_t from the same stream and check tau draws identically
        for (std::size_t b = 0; b < 5; ++b) {
            Rng rng = substream(3, StreamTag::Bootstrap, b);
            bboot::dirichlet_weights(d0.size(), rng);
            bboot::dirichlet_weights(d1.size(), rng);
            const auto wt = bboot::dirichlet_weights(dt.size(), rng);
            double s = 0;
            for (std::size_t i = 0; i < wt.size(); ++i) s += wt[i] * dt.outcomes()[i];
            CHECK((*pd.tau)[b] == s / dt.size() - pd.mu_c[b]);
        }
        CHECK(*pd.point_tau == doctest::Approx(stats::mean(dt.outcomes()) - pd.point));
    }
}

TEST_CASE("bb_replicate follows the documented draw order") {
    const auto d0 = normal_sample(20, 0.0, 9);
    const auto d1 = normal_sample(25, 0.4, 10, SourceLabel::External);
    const BorrowingRule rule{RuleKind::MinMSE, 1, 1, 51};
    Rng r1 = substream(5, StreamTag::Bootstrap, 0);
    const auto draw = bboot::bb_replicate(d0, d1, rule, false, BinaryVariance::PlugIn, r1);

    Rng r2 = substream(5, StreamTag::Bootstrap, 0);
    const auto w0 = bboot::dirichlet_weights(d0.size(), r2);
    const auto w1 = bboot::dirichlet_weights(d1.size(), r2);
    const auto s0 = summarize(d0, std::span<const double>(w0));
    const auto s1 = summarize(d1, std::span<const double>(w1));
    const double a = minmse(s0, s1, 1.0, 1.0).a;
    CHECK(draw.a == a);
    CHECK(draw.mu_c == doctest::Approx(combine(s0.mean, s1.mean, a)).epsilon(1e-14));
    CHECK(draw.mu_c >= std::min(s0.mean, s1.mean));
    CHECK(draw.mu_c <= std::max(s0.mean, s1.mean));
}

TEST_CASE("identical internal and external data borrow less than fully") {
    const auto d0 = normal_sample(200, 0.0, 11);
    const ControlSample d1(std::vector<double>(d0.outcomes().begin(), d0.outcomes().end()),
                           OutcomeKind::Continuous, SourceLabel::External);
    const auto pd = bboot::run(d0, d1, std::nullopt, config(300, 12, RuleKind::MinMSE));
    CHECK(pd.point_a == 1.0);
    CHECK(pd.a_summary.mean < 1.0);
    CHECK(pd.point == doctest::Approx(stats::mean(d0.outcomes())));
}

TEST_CASE("scaling the outcomes scales every draw") {
    const auto d0 = normal_sample(50, 0.0, 13);
    const auto d1 = normal_sample(70, 0.3, 14, SourceLabel::External);
    const auto cfg = config(200, 15, RuleKind::MinMSE);
    const auto a = bboot::run(d0, d1, std::nullopt, cfg);
    const auto b = bboot::run(d0.scaled(4.0), d1.scaled(4.0), std::nullopt, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b.a_star[i] == doctest::Approx(a.a_star[i]).epsilon(1e-10));
        CHECK(b.mu_c[i] == doctest::Approx(4.0 * a.mu_c[i]).epsilon(1e-10));
    }
}

TEST_CASE("no borrowing: BB posterior mean matches the sample mean") {
    const auto d0 = normal_sample(100, 0.7, 16);
    const auto d1 = normal_sample(100, 0.0, 17, SourceLabel::External);
    const auto pd = bboot::run(d0, d1, std::nullopt, config(2000, 18, RuleKind::None));
    for (double a : pd.a_star) CHECK(a == 0.0);
    const double mc_se = stats::sd(pd.mu_c) / std::sqrt(2000.0);
    CHECK(std::abs(pd.mu_c_summary.mean - stats::mean(d0.outcomes())) < 3 * mc_se);
    CHECK(pd.point == doctest::Approx(stats::mean(d0.outcomes())));
}

TEST_CASE("large-sample behaviour of minMSE: distinct means") {
    const auto d0 = normal_sample(10000, 0.0, 19);
    const auto shifted = normal_sample(10000, 0.5, 21, SourceLabel::External);
    const auto apart = bboot::run(d0, shifted, std::nullopt, config(500, 22, RuleKind::MinMSE));
    CHECK(apart.a_summary.mean < 0.02);
}

TEST_CASE("large-sample behaviour of minMSE: equal means") {
    // With equal means n delta_b^2 / sigma^2 is asymptotically 4 Z^2 (data-level
    // plus bootstrap-level noise), so E[a_b] -> E[1 / (1 + 4 Z^2)], which has the
    // closed form sqrt(pi / 2c) exp(1 / 2c) erfc(1 / sqrt(2c)) at c = 4.
    const double c = 4.0;
    const double pi = std::acos(-1.0);
    const double limit = std::sqrt(pi / (2 * c)) * std::exp(1 / (2 * c)) * std::erfc(1 / std::sqrt(2 * c));
    CHECK(limit == doctest::Approx(0.4384).epsilon(1e-3));

    std::vector<double> means;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        const auto d0 = normal_sample(1000, 0.0, 1000 + 2 * rep);
        const auto d1 = normal_sample(1000, 0.0, 1001 + 2 * rep, SourceLabel::External);
        means.push_back(bboot::run(d0, d1, std::nullopt, config(300, rep, RuleKind::MinMSE)).a_summary.mean);
    }
    const double se = stats::sd(means) / std::sqrt(200.0);
    CHECK(std::abs(stats::mean(means) - limit) < 3 * se);
}

TEST_CASE("posterior sd shrinks at rate n^-1/2") {
    double prev = 0;
    for (std::size_t n : {100u, 1000u, 10000u}) {
        const auto d0 = normal_sample(n, 0.0, 23 + n);
        const auto d1 = normal_sample(n, 0.0, 24 + n, SourceLabel::External);
        const double sd = bboot::run(d0, d1, std::nullopt, config(400, 25, RuleKind::MinMSE)).mu_c_summary.sd;
        if (prev > 0) {
            const double ratio = prev / sd;
            CHECK(ratio > std::sqrt(10.0) / 1.5);
            CHECK(ratio < std::sqrt(10.0) * 1.5);
        }
        prev = sd;
    }
}

TEST_CASE("zero-variance external sample falls back to no borrowing") {
    const auto d0 = normal_sample(30, 0.0, 26);
    const ControlSample d1(std::vector<double>(30, 2.0), OutcomeKind::Continuous, SourceLabel::External);
    const auto pd = bboot::run(d0, d1, std::nullopt, config(50, 27, RuleKind::MinMSE));
    CHECK(pd.point_degenerate);
    CHECK(pd.degenerate_count == 50);
    for (double a : pd.a_star) CHECK(a == 0.0);
}

TEST_CASE("binary maxML uses the grid on weighted counts and the Beta posterior mean") {
    std::vector<double> y0(40, 0.0), y1(60, 0.0);
    for (int i = 0; i < 12; ++i) y0[i] = 1;
    for (int i = 0; i < 21; ++i) y1[i] = 1;
    const ControlSample d0(y0, OutcomeKind::Binary), d1(y1, OutcomeKind::Binary, SourceLabel::External);
    const BorrowingRule rule{RuleKind::MaxML, 1.0, 1.0, 51};
    const auto est = bboot::estimate_control(d0, d1, std::nullopt, std::nullopt, rule,
                                             BinaryVariance::PlugIn);
    const auto grid = a0_grid(51);
    const auto ref = maxml_binomial({12, 40}, {21, 60}, grid, 1.0);
    CHECK(*est.borrow.a0 == *ref.a0);
    CHECK(est.mu_c == doctest::Approx(posterior_binomial(12, 40, 21, 60, *ref.a0).mean()));

    const auto pd = bboot::run(d0, d1, std::nullopt, config(200, 28, RuleKind::MaxML));
    for (double m : pd.mu_c) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
    }
}

TEST_CASE("IPW run reports the propensity model and balance") {
    const auto d0 = with_covariate(300, 0.0, 29, SourceLabel::Internal);
    const auto d1 = with_covariate(300, 0.5, 30, SourceLabel::External);
    auto cfg = config(100, 31, RuleKind::MinMSE);
    cfg.use_ipw = true;
    const auto pd = bboot::run(d0, d1, std::nullopt, cfg);
    REQUIRE(pd.ps_model);
    REQUIRE(pd.balance);
    CHECK(pd.balance->size() == 1);
    CHECK(std::abs((*pd.balance)[0].weighted_diff) < std::abs((*pd.balance)[0].raw_diff));
    CHECK(pd.ipw_failures == 0);

    const auto plain = normal_sample(30, 0, 32);
    CHECK_THROWS_AS(bboot::run(plain, plain, std::nullopt, cfg), Error);
}

TEST_CASE("config validation") {
    const auto d0 = normal_sample(10, 0, 33);
    CHECK_THROWS_AS(bboot::run(d0, d0, std::nullopt, config(1, 1, RuleKind::MinMSE)), Error);
}

TEST_CASE("intervals") {
    std::vector<double> x(100);
    std::iota(x.begin(), x.end(), 1.0);
    auto ci = bboot::interval(x, 50.0, bboot::IntervalMethod::Percentile);
    CHECK(ci.lower == doctest::Approx(3.475));
    CHECK(ci.upper == doctest::Approx(97.525));

    const std::vector<double> pm = {-1.0, 1.0};  // sd (n - 1) = sqrt(2)
    ci = bboot::interval(pm, 0.0, bboot::IntervalMethod::NormalApprox);
    CHECK(ci.upper == doctest::Approx(1.959963985 * std::sqrt(2.0)));
    CHECK(ci.lower == doctest::Approx(-ci.upper));

    // centred on the supplied point, not the draw mean
    ci = bboot::interval(pm, 5.0, bboot::IntervalMethod::NormalApprox);
    CHECK((ci.lower + ci.upper) / 2 == doctest::Approx(5.0));

    const std::vector<double> c(10, 2.5);
    for (auto m : {bboot::IntervalMethod::NormalApprox, bboot::IntervalMethod::Percentile}) {
        ci = bboot::interval(c, 2.5, m);
        CHECK(ci.lower == 2.5);
        CHECK(ci.upper == 2.5);
        CHECK(ci.degenerate);
    }
    CHECK_THROWS_AS(bboot::interval(x, 0.0, bboot::IntervalMethod::Percentile, 1.5), Error);
}

TEST_CASE("normal interval with unit sd draws") {
    // draws with sample sd exactly 1
    std::vector<double> d = {-1.0, 0.0, 1.0};
    const double sd = stats::sd(d);
    for (auto& v : d) v /= sd;
    const auto ci = bboot::interval(d, 0.0, bboot::IntervalMethod::NormalApprox);
    CHECK(ci.lower == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(ci.upper == doctest::Approx(1.959964).epsilon(1e-6));
}
