#include "borrow/posterior.hpp"

#include <cmath>

namespace borrow {

double combine(double mu0, double mu1, double a) {
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidWeight, "borrowing weight must be >= 0");
    return (mu0 + a * mu1) / (1.0 + a);
}

CombinedEstimate combine(const SummaryStats& internal, const SummaryStats& external, double a) {
    return {combine(internal.mean, external.mean, a), a, internal, external};
}

MseProfile mse_profile(double a, double sigma0_sq, double sigma1_sq, double delta, double eta) {
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidWeight, "borrowing weight must be >= 0");
    if (sigma0_sq < 0.0 || sigma1_sq < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "variances must be >= 0");
    }
    const double denom = (1.0 + a) * (1.0 + a);
    const double ed = eta * delta;
    MseProfile p;
    p.variance = (sigma0_sq + a * a * sigma1_sq) / denom;
    p.bias = a * delta / (1.0 + a);
    p.mse = (sigma0_sq + a * a * (sigma1_sq + ed * ed)) / denom;
    return p;
}

double optimal_a(double sigma0_sq, double sigma1_sq, double delta, double eta) {
    const double ed = eta * delta;
    const double denom = sigma1_sq + ed * ed;
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateVariance, "optimal weight undefined: zero denominator");
    }
    return sigma0_sq / denom;
}

double bias_at_optimum(double sigma0_sq, double sigma1_sq, double delta) {
    const double denom = sigma1_sq + sigma0_sq + delta * delta;
    if (!(denom > 0.0)) return 0.0;
    return delta * sigma0_sq / denom;
}

NormalPosterior posterior_normal(const SummaryStats& internal, const SummaryStats& external,
                                 double a0) {
    if (!(a0 >= 0.0 && a0 <= 1.0)) {
        throw Error(ErrorCode::InvalidWeight, "a0 must lie in [0, 1]");
    }
    if (!(internal.var_of_mean > 0.0) || !(external.var_of_mean > 0.0)) {
        throw Error(ErrorCode::DegenerateVariance, "normal posterior needs positive variances");
    }
    const double prec1 = a0 / external.var_of_mean;
    const double prec0 = 1.0 / internal.var_of_mean;
    NormalPosterior p;
    p.variance = 1.0 / (prec1 + prec0);
    p.mean = p.variance * (prec1 * external.mean + prec0 * internal.mean);
    return p;
}

BetaParams posterior_binomial(double y0_sum, double n0, double y1_sum, double n1, double a0) {
    if (!(a0 >= 0.0 && a0 <= 1.0)) {
        throw Error(ErrorCode::InvalidWeight, "a0 must lie in [0, 1]");
    }
    if (!(y0_sum >= 0.0 && y0_sum <= n0) || !(y1_sum >= 0.0 && y1_sum <= n1)) {
        throw Error(ErrorCode::InvalidCounts, "success count must lie in [0, n]");
    }
    return {a0 * y1_sum + y0_sum + 1.0, n0 + a0 * (n1 - y1_sum) - y0_sum + 1.0};
}

}  // namespace borrow
