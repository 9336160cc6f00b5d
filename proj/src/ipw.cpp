#include "borrow/ipw.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace borrow::ipw {

namespace {

double logistic(double eta) {
    return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Design {
    Eigen::MatrixXd x;   // intercept column first
    Eigen::VectorXd y;   // 1 = internal
    Eigen::VectorXd w;   // case weights
};

Design stack(const Covariates& x0, const Covariates& x1,
             std::optional<std::span<const double>> case_weights) {
    if (x0.cols() != x1.cols()) {
        throw Error(ErrorCode::InvalidArgument, "internal and external covariates differ in width");
    }
    const std::size_t n0 = x0.rows(), n1 = x1.rows(), p = x0.cols();
    const std::size_t n = n0 + n1;
    Design d{Eigen::MatrixXd(n, p + 1), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const bool internal = i < n0;
        const auto row = internal ? x0.row(i) : x1.row(i - n0);
        d.x(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) d.x(i, j + 1) = row[j];
        d.y(i) = internal ? 1.0 : 0.0;
    }
    if (case_weights) {
        if (case_weights->size() != n) {
            throw Error(ErrorCode::InvalidArgument, "case weights must have length n0 + n1");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (*case_weights)[i];
            if (!std::isfinite(w) || w < 0.0) {
                throw Error(ErrorCode::InvalidArgument, "case weights must be finite and >= 0");
            }
            d.w(i) = w;
        }
    }
    return d;
}

double deviance(const Design& d, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = d.x * beta;
    double dev = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // -log L_i = softplus(eta) - y eta
        dev += d.w(i) * (softplus(eta(i)) - d.y(i) * eta(i));
    }
    return 2.0 * dev;
}

}  // namespace

double PsModel::linear_predictor(std::span<const double> x) const {
    if (x.size() + 1 != coefficients.size()) {
        throw Error(ErrorCode::InvalidArgument, "covariate row width does not match the model");
    }
    double eta = coefficients[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[j + 1] * x[j];
    return eta;
}

double PsModel::propensity(std::span<const double> x) const {
    return logistic(linear_predictor(x));
}

PsModel fit_ps(const Covariates& x0, const Covariates& x1,
               std::optional<std::span<const double>> case_weights, const FitOptions& options) {
    const Design d = stack(x0, x1, case_weights);
    const Eigen::Index n = d.x.rows();
    const Eigen::Index k = d.x.cols();
    if (n <= k) {
        throw Error(ErrorCode::SingularDesign, "propensity model needs more rows than parameters");
    }

    {
        const Eigen::MatrixXd scaled = d.w.cwiseSqrt().asDiagonal() * d.x;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
        qr.setThreshold(1e-10);
        if (qr.rank() < k) {
            throw Error(ErrorCode::SingularDesign,
                        "propensity design is rank deficient (constant or collinear covariates)");
        }
    }

    PsModel model;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double dev = deviance(d, beta);

    for (int it = 1; it <= options.max_iterations; ++it) {
        model.iterations = it;
        const Eigen::VectorXd eta = d.x * beta;
        Eigen::VectorXd score_resid(n), irls_w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = logistic(eta(i));
            score_resid(i) = d.w(i) * (d.y(i) - mu);
            irls_w(i) = d.w(i) * std::max(mu * (1.0 - mu), 1e-300);
        }
        const Eigen::MatrixXd info = d.x.transpose() * irls_w.asDiagonal() * d.x;
        const Eigen::VectorXd score = d.x.transpose() * score_resid;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success) break;
        Eigen::VectorXd step = ldlt.solve(score);
        if (!step.allFinite()) break;

        // Halve the step until the deviance does not increase.
        double new_dev = deviance(d, beta + step);
        for (int h = 0; h < 30 && !(new_dev <= dev * (1.0 + 1e-12) + 1e-12); ++h) {
            step *= 0.5;
            new_dev = deviance(d, beta + step);
        }
        beta += step;
        dev = new_dev;
        if (step.cwiseAbs().maxCoeff() < options.tolerance) {
            model.converged = true;
            break;
        }
    }

    model.coefficients.assign(beta.data(), beta.data() + k);
    model.deviance = dev;

    const Eigen::VectorXd eta = d.x * beta;
    bool extreme = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = logistic(eta(i));
        if (d.w(i) > 0.0 && (mu < 1e-10 || mu > 1.0 - 1e-10)) extreme = true;
    }
    model.separation = extreme && (!model.converged || beta.cwiseAbs().maxCoeff() > 20.0);
    return model;
}

std::vector<double> odds_weights(std::span<const double> propensities,
                                 std::optional<std::span<const double>> base_weights) {
    const std::size_t n = propensities.size();
    if (base_weights && base_weights->size() != n) {
        throw Error(ErrorCode::InvalidArgument, "base weights must match the number of subjects");
    }
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::clamp(propensities[i], kPropensityClamp, 1.0 - kPropensityClamp);
        w[i] = e / (1.0 - e) * (base_weights ? (*base_weights)[i] : 1.0);
        total += w[i];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::DegenerateWeights, "IPW weights sum to zero");
    const double scale = static_cast<double>(n) / total;
    for (double& v : w) v *= scale;
    return w;
}

std::vector<double> ipw_weights(const PsModel& model, const Covariates& x1,
                                std::optional<std::span<const double>> base_weights) {
    std::vector<double> e(x1.rows());
    for (std::size_t i = 0; i < x1.rows(); ++i) e[i] = model.propensity(x1.row(i));
    return odds_weights(e, base_weights);
}

BalanceTable balance(const Covariates& x0, const Covariates& x1, std::span<const double> weights,
                     const std::vector<std::string>& names) {
    if (x0.cols() != x1.cols()) {
        throw Error(ErrorCode::InvalidArgument, "internal and external covariates differ in width");
    }
    if (weights.size() != x1.rows()) {
        throw Error(ErrorCode::InvalidArgument, "balance weights must have one entry per external row");
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw Error(ErrorCode::DegenerateWeights, "balance weights sum to zero");

    BalanceTable table;
    for (std::size_t j = 0; j < x0.cols(); ++j) {
        BalanceRow row;
        row.covariate = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        double s0 = 0.0, s1 = 0.0, sw = 0.0;
        for (std::size_t i = 0; i < x0.rows(); ++i) s0 += x0(i, j);
        for (std::size_t i = 0; i < x1.rows(); ++i) {
            s1 += x1(i, j);
            sw += weights[i] * x1(i, j);
        }
        row.internal_mean = s0 / static_cast<double>(x0.rows());
        row.external_mean = s1 / static_cast<double>(x1.rows());
        row.weighted_external_mean = sw / wsum;
        row.raw_diff = row.external_mean - row.internal_mean;
        row.weighted_diff = row.weighted_external_mean - row.internal_mean;
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace borrow::ipw
