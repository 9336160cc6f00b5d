#pragma once
// Small descriptive-statistics helpers shared by the bootstrap engine and
// the simulation harness.

#include <cstddef>
#include <span>
#include <vector>

namespace borrow::stats {

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, not on how they were produced.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample variance with denominator n - 1. Requires n >= 2.
double variance(std::span<const double> values);
double sd(std::span<const double> values);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `prob` in [0, 1].
double quantile(std::span<const double> values, double prob);
/// Same, on data already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Excess kurtosis (moment estimator, no small-sample correction).
double excess_kurtosis(std::span<const double> values);

/// Upper quantile of the standard normal: z such that Phi(z) = prob.
double normal_quantile(double prob);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double median = 0.0;
    double q975 = 0.0;

    friend bool operator==(const Summary&, const Summary&) = default;
};

Summary summarize_draws(std::span<const double> draws);

}  // namespace borrow::stats
