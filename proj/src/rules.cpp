#include "borrow/rules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace borrow {

std::string_view to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::MaxML: return "maxml";
        case RuleKind::CMinMSE: return "cminmse";
        case RuleKind::MinMSE: return "minmse";
        case RuleKind::None: return "none";
        case RuleKind::Full: return "full";
    }
    return "unknown";
}

RuleKind rule_kind_from_string(std::string_view name) {
    if (name == "maxml") return RuleKind::MaxML;
    if (name == "cminmse") return RuleKind::CMinMSE;
    if (name == "minmse") return RuleKind::MinMSE;
    if (name == "none") return RuleKind::None;
    if (name == "full") return RuleKind::Full;
    throw Error(ErrorCode::InvalidConfig, "unknown rule '" + std::string(name) + "'");
}

void BorrowingRule::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) {
        throw Error(ErrorCode::InvalidConfig, "eta must be finite and >= 0");
    }
    if (!(cap > 0.0)) throw Error(ErrorCode::InvalidConfig, "cap must be > 0");
    if (grid_points < 1) throw Error(ErrorCode::InvalidConfig, "grid_points must be >= 1");
}

std::string BorrowingRule::name() const {
    if (kind != RuleKind::MinMSE || eta == 1.0) return std::string(to_string(kind));
    std::ostringstream os;
    os << to_string(kind) << "(eta=" << eta << ")";
    return os.str();
}

CapResult apply_cap(double a, double cap) {
    if (a > cap) return {cap, true};
    return {a, false};
}

namespace {

BorrowAmount finish(double a_uncapped, double cap) {
    const CapResult c = apply_cap(a_uncapped, cap);
    return {c.a, a_uncapped, std::nullopt, c.capped};
}

// lbeta via lgamma_r: std::lgamma writes the global signgam.
double log_beta(double x, double y) {
    int sign = 0;
    return ::lgamma_r(x, &sign) + ::lgamma_r(y, &sign) - ::lgamma_r(x + y, &sign);
}

}  // namespace

BorrowAmount maxml_normal(const SummaryStats& internal, const SummaryStats& external, double cap) {
    const double var0 = internal.var_of_mean;
    const double var1 = external.var_of_mean;
    if (!(var1 > 0.0)) {
        throw Error(ErrorCode::DegenerateVariance,
                    "maxML is undefined when the external variance of the mean is zero");
    }
    const double delta = external.mean - internal.mean;
    // max(delta^2, var1 + var0) - var0, rearranged so that var1 is not lost to
    // cancellation when var0 >> var1.
    const double denom = std::max(delta * delta - var0, var1);
    const double a0 = var1 / denom;
    // a = a0 var0/var1, with var1 cancelled
    const double a_uncapped = var0 / denom;

    BorrowAmount out = finish(a_uncapped, cap);
    out.a0 = out.capped ? out.a * var1 / var0 : a0;
    return out;
}

double binomial_log_marginal(double a0, const BinomialCounts& internal,
                             const BinomialCounts& external) {
    const double y1 = external.successes;
    const double f1 = external.n - external.successes;
    const double y0 = internal.successes;
    const double f0 = internal.n - internal.successes;
    return log_beta(a0 * y1 + y0 + 1.0, a0 * f1 + f0 + 1.0) -
           log_beta(a0 * y1 + 1.0, a0 * f1 + 1.0);
}

std::vector<double> a0_grid(int points) {
    if (points < 1) throw Error(ErrorCode::InvalidGrid, "grid needs at least one point");
    if (points == 1) return {0.0};
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) grid[k] = static_cast<double>(k) / (points - 1);
    return grid;
}

BorrowAmount maxml_binomial(const BinomialCounts& internal, const BinomialCounts& external,
                            std::span<const double> grid, double cap) {
    if (grid.empty()) throw Error(ErrorCode::InvalidGrid, "a0 grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0 && grid[k] <= 1.0) || (k > 0 && grid[k] < grid[k - 1])) {
            throw Error(ErrorCode::InvalidGrid, "a0 grid must be sorted and within [0, 1]");
        }
    }
    for (const auto* c : {&internal, &external}) {
        if (!(c->n >= 1.0) || !(c->successes >= 0.0) || c->successes > c->n) {
            throw Error(ErrorCode::InvalidCounts, "success count must lie in [0, n], n >= 1");
        }
    }

    double best_ll = -std::numeric_limits<double>::infinity();
    double best_a0 = grid.front();
    for (double a0 : grid) {
        const double ll = binomial_log_marginal(a0, internal, external);
        if (ll >= best_ll) {
            best_ll = ll;
            best_a0 = a0;
        }
    }

    const double ratio = external.n / internal.n;
    const CapResult c = apply_cap(best_a0, cap / ratio);
    BorrowAmount out;
    out.a0 = c.a;
    out.a = c.a * ratio;
    out.a_uncapped = best_a0 * ratio;
    out.capped = c.capped;
    return out;
}

BorrowAmount cminmse(const SummaryStats& internal, const SummaryStats& external, double cap) {
    const double var0 = internal.var_of_mean;
    const double var1 = external.var_of_mean;
    const double delta = external.mean - internal.mean;
    const double denom = std::max(delta * delta - var0, var1);
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateVariance,
                    "cminMSE is undefined: both delta^2 - var0 and var1 are <= 0");
    }
    return finish(var0 / denom, cap);
}

BorrowAmount minmse(const SummaryStats& internal, const SummaryStats& external, double eta,
                    double cap) {
    const double var0 = internal.var_of_mean;
    const double var1 = external.var_of_mean;
    const double delta = external.mean - internal.mean;
    const double denom = var1 + eta * eta * delta * delta;
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateVariance,
                    "minMSE is undefined: var1 + (eta delta)^2 is zero");
    }
    return finish(var0 / denom, cap);
}

BorrowAmount choose_borrowing(const BorrowingRule& rule, const SummaryStats& internal,
                              const SummaryStats& external) {
    switch (rule.kind) {
        case RuleKind::MaxML: return maxml_normal(internal, external, rule.cap);
        case RuleKind::CMinMSE: return cminmse(internal, external, rule.cap);
        case RuleKind::MinMSE: return minmse(internal, external, rule.eta, rule.cap);
        case RuleKind::None: return BorrowAmount{0.0, 0.0, 0.0, false};
        case RuleKind::Full: {
            if (!(external.var_of_mean > 0.0)) {
                throw Error(ErrorCode::DegenerateVariance,
                            "full borrowing needs a positive external variance");
            }
            BorrowAmount out = finish(internal.var_of_mean / external.var_of_mean, rule.cap);
            out.a0 = out.capped ? out.a * external.var_of_mean / internal.var_of_mean : 1.0;
            return out;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown rule kind");
}

}  // namespace borrow
