#pragma once
// Combined estimator, its bias/variance/MSE profile, and the closed-form
// conditional posteriors for a fixed power-prior discount.

#include "borrow/core.hpp"

namespace borrow {

/// (mu0 + a mu1)/(1 + a). Throws InvalidWeight for a < 0.
double combine(double mu0, double mu1, double a);

struct CombinedEstimate {
    double mu_c = 0.0;
    double a = 0.0;
    SummaryStats internal;
    SummaryStats external;
};

CombinedEstimate combine(const SummaryStats& internal, const SummaryStats& external, double a);

/// Sampling profile of the combined estimator for known variances and mean
/// difference delta = mu1 - mu0. `mse` is the eta-weighted objective
/// variance + eta^2 bias^2; `bias` itself is unweighted.
struct MseProfile {
    double variance = 0.0;
    double bias = 0.0;
    double mse = 0.0;
};

MseProfile mse_profile(double a, double sigma0_sq, double sigma1_sq, double delta,
                       double eta = 1.0);

/// Minimizer of mse_profile over a >= 0: sigma0^2 / (sigma1^2 + eta^2 delta^2).
double optimal_a(double sigma0_sq, double sigma1_sq, double delta, double eta = 1.0);

/// Bias at the unweighted optimum, delta sigma0^2 / (sigma1^2 + sigma0^2 + delta^2).
/// Its square peaks at delta^2 = sigma0^2 + sigma1^2.
double bias_at_optimum(double sigma0_sq, double sigma1_sq, double delta);

struct NormalPosterior {
    double mean = 0.0;
    double variance = 0.0;
};

/// Posterior of mu0 given a0 for normal data with plug-in variances.
NormalPosterior posterior_normal(const SummaryStats& internal, const SummaryStats& external,
                                 double a0);

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    double variance() const {
        const double s = alpha + beta;
        return alpha * beta / (s * s * (s + 1.0));
    }
};

/// Beta(a0 y1 + y0 + 1, n0 + a0 (n1 - y1) - y0 + 1); counts may be weighted.
BetaParams posterior_binomial(double y0_sum, double n0, double y1_sum, double n1, double a0);

}  // namespace borrow
