#pragma once
// Monte-Carlo harness for the operating characteristics of the borrowing
// rules: data generators for internal/external controls and a scenario
// runner reporting variance, MSE, mean borrowing and interval coverage.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "borrow/core.hpp"
#include "borrow/rng.hpp"
#include "borrow/rules.hpp"

namespace borrow::sim {

enum class OutcomeFamily { Normal, Binary, StudentT };

std::string_view to_string(OutcomeFamily family);
OutcomeFamily outcome_family_from_string(std::string_view name);

/// Default common coefficient: 0.5 for continuous outcomes, 0.2 for binary.
double default_beta(OutcomeFamily family);

/// Y = x'beta + shift + N(0, 1), x ~ N(0, I_p), beta = beta * 1_p.
/// Covariates are attached when p > 0.
ControlSample gen_normal(std::size_t n, double shift, int p, double beta, Rng& rng,
                         SourceLabel source = SourceLabel::Internal);

/// Y ~ Bernoulli(1/(1 + exp(x'beta - logit(p0 + shift)))).
/// Requires 0 < p0 + shift < 1.
ControlSample gen_binary(std::size_t n, double shift, double p0, int p, double beta, Rng& rng,
                         SourceLabel source = SourceLabel::Internal);

/// As gen_normal with standard Student-t(df) noise (scale 1). Requires df > 2.
ControlSample gen_student_t(std::size_t n, double shift, int p, double beta, double df, Rng& rng,
                            SourceLabel source = SourceLabel::Internal);

/// E[1/(1 + exp(x'beta - logit(p0)))] for x ~ N(0, I_p): exactly p0 when
/// beta = 0 or p = 0, otherwise a cached 10^7-draw Monte-Carlo estimate.
double binary_true_rate(double p0, int p, double beta);

struct ScenarioConfig {
    std::string id;
    OutcomeFamily outcome = OutcomeFamily::Normal;
    double df = 3.0;
    int p = 5;
    std::optional<double> beta;  // family default when unset
    int n0 = 100;
    int n1_multiplier = 1;
    double delta = 0.0;
    double p0 = 0.2;
    double cap = 1.0;
    std::vector<BorrowingRule> rules;  // each rule's cap is replaced by `cap`
    int nsim = 2000;
    int nboot = 100;  // 0 or 1 skips the bootstrap and coverage
    std::uint64_t seed = 1;
    double level = 0.95;
    BinaryVariance binary_variance = BinaryVariance::BetaPosterior;
    unsigned threads = 0;

    double beta_value() const { return beta.value_or(default_beta(outcome)); }
    int n1() const { return n0 * n1_multiplier; }

    /// Returns a list of "field: problem" messages; empty when valid.
    std::vector<std::string> problems() const;
    /// Throws InvalidConfig listing every problem.
    void validate() const;
};

struct MetricsRow {
    std::string scenario_id;
    std::string outcome;
    double df = 0.0;
    int p = 0;
    double beta = 0.0;
    int n0 = 0;
    int n1 = 0;
    double delta = 0.0;
    double p0 = 0.0;
    double cap = 0.0;
    int nsim = 0;
    int nboot = 0;
    std::uint64_t seed = 0;
    std::string rule;
    double eta = 1.0;

    double truth = 0.0;
    std::string truth_source;  // "exact" or "mc-oracle"
    double mean_estimate = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double se_variance = 0.0;
    double mse = 0.0;
    double se_mse = 0.0;
    double mean_a = 0.0;
    double capped_fraction = 0.0;
    double coverage_normal = 0.0;  // NaN when nboot < 2
    double se_coverage_normal = 0.0;
    double coverage_percentile = 0.0;
    double se_coverage_percentile = 0.0;
    double nob_variance = 0.0;   // empirical variance without borrowing
    double nob_mse = 0.0;
    double nob_benchmark = 0.0;  // analytic variance of the internal mean
    int failures = 0;
    int degenerate = 0;
};

struct ScenarioResult {
    std::vector<MetricsRow> rows;  // one per rule, in config order
    /// errors[r][s]: point estimate minus truth for rule r, simulation s
    /// (failed simulations excluded; same subset for every rule).
    std::vector<std::vector<double>> errors;
    std::vector<double> nob_errors;
    double truth = 0.0;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Paired Monte-Carlo standard error of mean(sq_a) - mean(sq_b) for two
/// error vectors of equal length.
double paired_mse_diff_se(const std::vector<double>& errors_a,
                          const std::vector<double>& errors_b);

}  // namespace borrow::sim
