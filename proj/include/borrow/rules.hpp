#pragma once
// Rules for the amount of borrowing from an external control source.
//
// Two scales are used throughout:
//   a0 - power-prior discount on the external likelihood, in [0, 1];
//   a  - weight on the external mean in (mu0 + a mu1)/(1 + a).
// They are related by a = a0 * var0/var1, i.e. a = a0 * n1/n0 when the
// per-subject variances agree. Caps are always expressed on the a-scale,
// as a fraction of the internal sample's weight.

#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "borrow/core.hpp"

namespace borrow {

enum class RuleKind {
    MaxML,    // empirical Bayes: maximize the marginal likelihood of a0
    CMinMSE,  // MSE-optimal weight with the variance-corrected squared difference
    MinMSE,   // MSE-optimal weight with the raw squared difference (optionally eta-weighted)
    None,     // reference: internal data only
    Full,     // reference: a0 = 1
};

std::string_view to_string(RuleKind kind);
RuleKind rule_kind_from_string(std::string_view name);

inline constexpr double kNoCap = std::numeric_limits<double>::infinity();

struct BorrowingRule {
    RuleKind kind = RuleKind::MinMSE;
    double eta = 1.0;       // bias weight; MinMSE only
    double cap = kNoCap;    // a <= cap
    int grid_points = 51;   // a0 grid resolution for binomial MaxML

    /// Throws InvalidConfig when eta < 0, cap <= 0 or grid_points < 1.
    void validate() const;
    std::string name() const;

    friend bool operator==(const BorrowingRule&, const BorrowingRule&) = default;
};

struct BorrowAmount {
    double a = 0.0;                // weight on the external mean, after capping
    double a_uncapped = 0.0;       // same before the cap
    std::optional<double> a0;      // power-prior discount when the rule defines one
    bool capped = false;
};

struct CapResult {
    double a = 0.0;
    bool capped = false;
};

/// min(a, cap); a value equal to the cap is not reported as capped.
CapResult apply_cap(double a, double cap);

/// Closed-form maximum marginal likelihood discount for normal outcomes:
/// a0 = var1 / (max(delta^2, var1 + var0) - var0), delta = mean1 - mean0.
/// Throws DegenerateVariance when external.var_of_mean == 0.
BorrowAmount maxml_normal(const SummaryStats& internal, const SummaryStats& external,
                          double cap = kNoCap);

/// Binomial success count; `successes` may be a weighted, non-integer total.
struct BinomialCounts {
    double successes = 0.0;
    double n = 0.0;
};

/// log of the (unnormalized) marginal likelihood of a0 for binomial data
/// under a Beta(1, 1) initial prior.
double binomial_log_marginal(double a0, const BinomialCounts& internal,
                             const BinomialCounts& external);

/// Equispaced grid (0, 1/(points-1), ..., 1); a single point gives {0}.
std::vector<double> a0_grid(int points);

/// Grid argmax of binomial_log_marginal. Ties resolve to the largest a0
/// attaining the maximum, which favours borrowing under flat likelihoods.
/// The a0 cap is cap * n0/n1; the returned `a` is a0 * n1/n0.
BorrowAmount maxml_binomial(const BinomialCounts& internal, const BinomialCounts& external,
                            std::span<const double> grid, double cap = kNoCap);

/// a = var0 / max(delta^2 - var0, var1). Throws DegenerateVariance when
/// both arguments of the max are <= 0.
BorrowAmount cminmse(const SummaryStats& internal, const SummaryStats& external,
                     double cap = kNoCap);

/// a = var0 / (var1 + eta^2 delta^2). Throws DegenerateVariance when the
/// denominator is zero.
BorrowAmount minmse(const SummaryStats& internal, const SummaryStats& external, double eta = 1.0,
                    double cap = kNoCap);

/// Dispatch on the rule kind for summary-based rules. For MaxML this is the
/// normal closed form; binomial data go through maxml_binomial instead.
BorrowAmount choose_borrowing(const BorrowingRule& rule, const SummaryStats& internal,
                              const SummaryStats& external);

}  // namespace borrow
