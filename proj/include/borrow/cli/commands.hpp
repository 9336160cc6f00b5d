#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "borrow/cli/dataset.hpp"
#include "borrow/cli/report.hpp"
#include "borrow/rules.hpp"

namespace borrow::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct AnalyzeOptions {
    DatasetSpec data;
    std::vector<RuleKind> rules = {RuleKind::MinMSE};
    double eta = 1.0;
    double cap = 1.0;
    int grid_points = 51;
    int boots = 1000;
    std::uint64_t seed = 0;
    bool ipw = false;
    double level = 0.95;
    BinaryVariance binary_variance = BinaryVariance::PlugIn;
    unsigned threads = 0;
};

/// Loads the data and runs the bootstrap for every requested rule.
/// Throws CliError (exit 2 for bad input, 3 for degenerate data).
AnalysisReport analyze(const AnalyzeOptions& options);

struct CurveOptions {
    double sigma0 = 1.0;  // standard deviation of the internal mean estimator
    double sigma1 = 1.0;  // standard deviation of the external mean estimator
    double delta_max = 3.0;
    double eta = 1.0;
    int steps = 300;
};

struct CurveRow {
    double delta = 0.0;
    double a_star = 0.0;
    double variance = 0.0;
    double bias = 0.0;
    double bias_sq = 0.0;
    double mse = 0.0;
    bool bias_max = false;
};

/// Analytic profile over delta in [0, delta_max] at steps + 1 equispaced
/// points, plus the exact bias maximum delta = sqrt(sigma0^2 + sigma1^2)/eta
/// inserted in order (flagged) when it lies inside the range.
std::vector<CurveRow> curve(const CurveOptions& options);
void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows);

/// Entry point shared by the executable and the tests. Returns the exit
/// code: 0 success, 2 invalid input or flags, 3 degenerate data.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace borrow::cli
