#pragma once
// Propensity-score model for membership in the internal source and the
// inverse-probability weights that tilt the external sample towards the
// internal covariate distribution.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "borrow/core.hpp"

namespace borrow::ipw {

/// Logistic model for P(internal | x). Coefficients are intercept first.
struct PsModel {
    std::vector<double> coefficients;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    /// Fitted probabilities reached 0 or 1 with growing coefficients.
    bool separation = false;

    double linear_predictor(std::span<const double> x) const;
    double propensity(std::span<const double> x) const;
};

struct FitOptions {
    double tolerance = 1e-8;  // max |coefficient change|
    int max_iterations = 50;
};

/// Weighted logistic regression of the internal-source indicator on the
/// stacked covariates [x0; x1], fitted by IRLS from zero coefficients with
/// step halving whenever the deviance increases. `case_weights`, when given,
/// has length n0 + n1 (internal rows first).
///
/// Throws SingularDesign for a rank-deficient design or too few rows.
/// Separation is reported through PsModel::separation, not thrown.
PsModel fit_ps(const Covariates& x0, const Covariates& x1,
               std::optional<std::span<const double>> case_weights = std::nullopt,
               const FitOptions& options = {});

inline constexpr double kPropensityClamp = 1e-6;

/// Odds e/(1 - e) of the clamped propensities, multiplied by `base_weights`
/// when given, renormalized to sum to the number of subjects.
std::vector<double> odds_weights(std::span<const double> propensities,
                                 std::optional<std::span<const double>> base_weights = std::nullopt);

/// IPW weights for the external subjects in `x1`.
std::vector<double> ipw_weights(const PsModel& model, const Covariates& x1,
                                std::optional<std::span<const double>> base_weights = std::nullopt);

struct BalanceRow {
    std::string covariate;
    double internal_mean = 0.0;
    double external_mean = 0.0;
    double weighted_external_mean = 0.0;
    double raw_diff = 0.0;       // external - internal
    double weighted_diff = 0.0;  // weighted external - internal

    friend bool operator==(const BalanceRow&, const BalanceRow&) = default;
};

using BalanceTable = std::vector<BalanceRow>;

/// Covariate mean differences (external minus internal), raw and with the
/// external sample weighted by `weights` (length n1).
BalanceTable balance(const Covariates& x0, const Covariates& x1, std::span<const double> weights,
                     const std::vector<std::string>& names = {});

}  // namespace borrow::ipw
