#include "borrow/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "borrow/stats.hpp"

namespace borrow {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateSample: return "DegenerateSample";
        case ErrorCode::DegenerateWeights: return "DegenerateWeights";
        case ErrorCode::InvalidCounts: return "InvalidCounts";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::InvalidWeight: return "InvalidWeight";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SingularDesign: return "SingularDesign";
    }
    return "Unknown";
}

std::string_view to_string(OutcomeKind kind) {
    return kind == OutcomeKind::Binary ? "binary" : "continuous";
}

std::string_view to_string(SourceLabel label) {
    switch (label) {
        case SourceLabel::Internal: return "internal";
        case SourceLabel::External: return "external";
        case SourceLabel::Treated: return "treated";
    }
    return "unknown";
}

std::string_view to_string(BinaryVariance mode) {
    switch (mode) {
        case BinaryVariance::Sample: return "sample";
        case BinaryVariance::PlugIn: return "plugin";
        case BinaryVariance::BetaPosterior: return "beta";
    }
    return "unknown";
}

BinaryVariance binary_variance_from_string(std::string_view name) {
    if (name == "sample") return BinaryVariance::Sample;
    if (name == "plugin") return BinaryVariance::PlugIn;
    if (name == "beta") return BinaryVariance::BetaPosterior;
    throw Error(ErrorCode::InvalidArgument,
                "unknown binary variance estimator '" + std::string(name) + "'");
}

Covariates::Covariates(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw Error(ErrorCode::InvalidArgument, "covariate data size does not match rows x cols");
    }
}

std::vector<double> Covariates::column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

ControlSample::ControlSample(std::vector<double> outcomes, OutcomeKind kind, SourceLabel source,
                             std::optional<Covariates> covariates)
    : outcomes_(std::move(outcomes)),
      kind_(kind),
      source_(source),
      covariates_(std::move(covariates)) {
    if (outcomes_.size() < 2) {
        throw Error(ErrorCode::DegenerateSample,
                    std::string(to_string(source_)) + " sample needs at least two outcomes");
    }
    for (double y : outcomes_) {
        if (!std::isfinite(y)) {
            throw Error(ErrorCode::InvalidArgument, "outcomes must be finite");
        }
        if (kind_ == OutcomeKind::Binary && y != 0.0 && y != 1.0) {
            throw Error(ErrorCode::InvalidArgument, "binary outcomes must be 0 or 1");
        }
    }
    if (covariates_) {
        if (covariates_->rows() != outcomes_.size()) {
            throw Error(ErrorCode::InvalidArgument,
                        "covariate matrix must have one row per outcome");
        }
        if (covariates_->cols() == 0) {
            throw Error(ErrorCode::InvalidArgument, "covariate matrix has no columns");
        }
        for (double x : covariates_->data()) {
            if (!std::isfinite(x)) {
                throw Error(ErrorCode::InvalidArgument, "covariates must be finite");
            }
        }
    }
}

double ControlSample::total() const { return stats::pairwise_sum(outcomes_); }

ControlSample ControlSample::scaled(double factor) const {
    std::vector<double> y(outcomes_);
    for (double& v : y) v *= factor;
    auto kind = factor == 1.0 ? kind_ : OutcomeKind::Continuous;
    return ControlSample(std::move(y), kind, source_, covariates_);
}

SummaryStats summarize(std::span<const double> outcomes,
                       std::optional<std::span<const double>> weights) {
    const std::size_t n = outcomes.size();
    if (n < 2) {
        throw Error(ErrorCode::DegenerateSample, "summary needs at least two outcomes");
    }
    const double dn = static_cast<double>(n);
    // Sums run on outcomes shifted by the first value, so a constant sample
    // has exactly zero spread under any weights.
    const double shift = outcomes[0];

    if (!weights) {
        double sum = 0.0;
        for (double y : outcomes) sum += y - shift;
        const double m = shift + sum / dn;
        double ss = 0.0;
        for (double y : outcomes) ss += (y - m) * (y - m);
        return {n, m, ss / (dn - 1.0) / dn};
    }

    if (weights->size() != n) {
        throw Error(ErrorCode::DegenerateWeights, "weight vector length differs from sample size");
    }
    double total = 0.0;
    for (double w : *weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::DegenerateWeights, "weights must be finite and nonnegative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw Error(ErrorCode::DegenerateWeights, "weights sum to zero");
    }
    const double scale = dn / total;

    double sum_wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_wy += (*weights)[i] * scale * (outcomes[i] - shift);
    const double m = shift + sum_wy / dn;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = outcomes[i] - m;
        ss += (*weights)[i] * scale * d * d;
    }
    return {n, m, ss / (dn - 1.0) / dn};
}

SummaryStats summarize(const ControlSample& sample,
                       std::optional<std::span<const double>> weights) {
    return summarize(sample.outcomes(), weights);
}

namespace {

void check_counts(double y_sum, double n) {
    if (!(n >= 1.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::InvalidCounts, "binomial sample size must be at least 1");
    }
    if (!(y_sum >= 0.0) || y_sum > n) {
        throw Error(ErrorCode::InvalidCounts, "success count must lie in [0, n]");
    }
}

}  // namespace

SummaryStats binary_summary_beta(double y_sum, double n) {
    check_counts(y_sum, n);
    const double a = y_sum + 1.0;
    const double b = n - y_sum + 1.0;
    return {static_cast<std::size_t>(std::llround(n)), a / (n + 2.0),
            a * b / ((n + 2.0) * (n + 2.0) * (n + 3.0))};
}

SummaryStats binary_summary_plugin(double y_sum, double n) {
    check_counts(y_sum, n);
    const double p = y_sum / n;
    return {static_cast<std::size_t>(std::llround(n)), p, p * (1.0 - p) / n};
}

SummaryStats summarize_binary(const ControlSample& sample, BinaryVariance mode,
                              std::optional<std::span<const double>> weights) {
    SummaryStats s = summarize(sample, weights);
    if (mode == BinaryVariance::Sample) return s;
    const double n = static_cast<double>(s.n);
    const double y_sum = std::clamp(s.mean * n, 0.0, n);
    s.var_of_mean = mode == BinaryVariance::PlugIn ? binary_summary_plugin(y_sum, n).var_of_mean
                                                   : binary_summary_beta(y_sum, n).var_of_mean;
    return s;
}

}  // namespace borrow
