#pragma once
// Shared data model: samples from each data source, their summary
// statistics, and the error type used across the library.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace borrow {

enum class ErrorCode {
    DegenerateSample,
    DegenerateWeights,
    InvalidCounts,
    DegenerateVariance,
    InvalidGrid,
    InvalidWeight,
    InvalidConfig,
    InvalidArgument,
    SingularDesign,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class OutcomeKind { Continuous, Binary };
enum class SourceLabel { Internal, External, Treated };

std::string_view to_string(OutcomeKind kind);
std::string_view to_string(SourceLabel label);

/// Dense row-major n x p covariate matrix.
class Covariates {
public:
    Covariates() = default;
    Covariates(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Covariates(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::vector<double> column(std::size_t j) const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Covariates&, const Covariates&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Outcomes from one data source. Construction validates the invariants:
/// at least two subjects, {0,1}-only outcomes for binary samples, and a
/// covariate matrix (when present) with one finite row per subject.
class ControlSample {
public:
    ControlSample(std::vector<double> outcomes, OutcomeKind kind,
                  SourceLabel source = SourceLabel::Internal,
                  std::optional<Covariates> covariates = std::nullopt);

    std::size_t size() const noexcept { return outcomes_.size(); }
    std::span<const double> outcomes() const noexcept { return outcomes_; }
    OutcomeKind kind() const noexcept { return kind_; }
    SourceLabel source() const noexcept { return source_; }
    const std::optional<Covariates>& covariates() const noexcept { return covariates_; }
    bool has_covariates() const noexcept { return covariates_.has_value(); }

    /// Sum of outcomes (the success count for binary samples).
    double total() const;

    /// Same sample with every outcome multiplied by `factor`.
    ControlSample scaled(double factor) const;

private:
    std::vector<double> outcomes_;
    OutcomeKind kind_;
    SourceLabel source_;
    std::optional<Covariates> covariates_;
};

/// Sample size, mean estimate and variance of the mean estimator.
struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double var_of_mean = 0.0;

    friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

struct CausalEstimand {
    double mu_t = 0.0;
    double mu_c = 0.0;
    double tau = 0.0;

    static CausalEstimand from_means(double mu_t, double mu_c) {
        return {mu_t, mu_c, mu_t - mu_c};
    }
};

/// Weighted mean and variance of the mean.
///
/// Weights are rescaled to sum to n; the mean is sum(w y)/n and the
/// variance of the mean is [sum(w (y - mean)^2)/(n - 1)]/n. The (n - 1)
/// denominator is a convention carried over from the unweighted case and
/// is not an unbiasedness statement under random weights. With no weights
/// this is the ordinary sample mean and s^2/n.
SummaryStats summarize(std::span<const double> outcomes,
                       std::optional<std::span<const double>> weights = std::nullopt);
SummaryStats summarize(const ControlSample& sample,
                       std::optional<std::span<const double>> weights = std::nullopt);

/// Beta(y + 1, n - y + 1) posterior moments of a binomial rate under a
/// uniform prior. `y_sum` may be a weighted (non-integer) count.
SummaryStats binary_summary_beta(double y_sum, double n);

/// Plug-in binomial summary: mean y/n, variance of the mean p(1 - p)/n.
SummaryStats binary_summary_plugin(double y_sum, double n);

/// How the variance of a binary mean is estimated.
enum class BinaryVariance {
    Sample,         // summarize(): weighted sample variance / n
    PlugIn,         // p(1 - p)/n
    BetaPosterior,  // moments of Beta(y + 1, n - y + 1)
};

std::string_view to_string(BinaryVariance mode);
BinaryVariance binary_variance_from_string(std::string_view name);

/// Summary of a binary sample under the chosen variance estimator. The
/// mean is always the (weighted) success proportion; only the variance of
/// the mean depends on `mode`.
SummaryStats summarize_binary(const ControlSample& sample, BinaryVariance mode,
                              std::optional<std::span<const double>> weights = std::nullopt);

}  // namespace borrow
