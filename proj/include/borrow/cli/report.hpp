#pragma once
// Analysis report produced by `borrow analyze`, with JSON and CSV writers.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrow/bboot.hpp"
#include "borrow/cli/dataset.hpp"
#include "borrow/ipw.hpp"

namespace borrow::cli {

struct IntervalOut {
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;

    friend bool operator==(const IntervalOut&, const IntervalOut&) = default;
};

struct DrawSummary {
    double point = 0.0;  // plug-in estimate on the unweighted data
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    IntervalOut normal_ci;
    IntervalOut percentile_ci;

    friend bool operator==(const DrawSummary&, const DrawSummary&) = default;
};

struct RuleReport {
    std::string rule;
    double eta = 1.0;
    double cap = 1.0;
    DrawSummary mu_c;
    std::optional<DrawSummary> tau;
    double point_a = 0.0;
    std::optional<double> point_a0;
    bool point_degenerate = false;
    double a_mean = 0.0;
    double a_sd = 0.0;
    double capped_fraction = 0.0;
    std::size_t degenerate_replicates = 0;
    std::size_t ipw_failures = 0;
    bool negligible_borrowing = false;

    friend bool operator==(const RuleReport&, const RuleReport&) = default;
};

struct SampleOut {
    std::string source;
    std::size_t n = 0;
    double mean = 0.0;
    double var_of_mean = 0.0;

    friend bool operator==(const SampleOut&, const SampleOut&) = default;
};

struct PsModelOut {
    std::vector<std::string> terms;  // "(intercept)" then covariate names
    std::vector<double> coefficients;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    bool separation = false;

    friend bool operator==(const PsModelOut&, const PsModelOut&) = default;
};

struct ReportMetadata {
    std::string tool_version;
    std::uint64_t seed = 0;
    int boots = 0;
    double cap = 1.0;
    double eta = 1.0;
    int grid_points = 51;
    double level = 0.95;
    bool ipw = false;
    std::string outcome_kind;
    std::string binary_variance;
    std::vector<std::string> rules;
    std::string outcome_column;
    std::vector<std::string> covariates;
    std::vector<InputFingerprint> inputs;

    friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct AnalysisReport {
    ReportMetadata metadata;
    std::vector<SampleOut> samples;
    std::vector<RuleReport> rules;
    std::optional<PsModelOut> ps_model;
    std::optional<ipw::BalanceTable> balance;
    std::vector<std::string> warnings;

    friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

/// Mean bootstrap weight below which a report flags borrowing as negligible.
inline constexpr double kNegligibleBorrowing = 0.05;

nlohmann::json to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);

/// One CSV row per rule (fixed column order), header included.
void write_report_csv(std::ostream& os, const AnalysisReport& report);

/// Column names of the per-rule CSV.
const std::vector<std::string>& report_csv_columns();

DrawSummary summarize_draws(std::span<const double> draws, double point, double level);

}  // namespace borrow::cli
