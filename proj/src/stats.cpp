#include "borrow/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "borrow/core.hpp"

namespace borrow::stats {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kBlock = 64;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty range");
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "variance needs at least two values");
    }
    const double m = mean(values);
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(),
                   [m](double v) { return (v - m) * (v - m); });
    return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

double sd(std::span<const double> values) { return std::sqrt(variance(values)); }

double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty range");
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "quantile probability outside [0, 1]");
    }
    const double h = static_cast<double>(sorted.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double prob) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, prob);
}

double excess_kurtosis(std::span<const double> values) {
    const double m = mean(values);
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d2 = (v - m) * (v - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    const double n = static_cast<double>(values.size());
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2) - 3.0;
}

double normal_quantile(double prob) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

Summary summarize_draws(std::span<const double> draws) {
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    Summary s;
    s.mean = mean(draws);
    s.sd = draws.size() >= 2 ? sd(draws) : 0.0;
    s.q025 = quantile_sorted(sorted, 0.025);
    s.median = quantile_sorted(sorted, 0.5);
    s.q975 = quantile_sorted(sorted, 0.975);
    return s;
}

}  // namespace borrow::stats
