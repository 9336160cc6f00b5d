#pragma once
// Bayesian-bootstrap posterior sampling for the combined control mean.
//
// Each replicate draws uniform-Dirichlet weights for every source (scaled
// to sum to the source size), optionally refits the propensity model with
// those weights and tilts the external weights by the propensity odds,
// re-evaluates the borrowing rule on the weighted summaries and records
// the combined mean. With a treated sample, the treated mean is
// bootstrapped the same way and tau = mu_t - mu_c is recorded as well.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "borrow/core.hpp"
#include "borrow/ipw.hpp"
#include "borrow/rng.hpp"
#include "borrow/rules.hpp"
#include "borrow/stats.hpp"

namespace borrow::bboot {

struct BootstrapConfig {
    int B = 1000;
    std::uint64_t seed = 0;
    BorrowingRule rule;
    bool use_ipw = false;
    /// Variance-of-mean estimator for binary outcomes (summary-based rules).
    BinaryVariance binary_variance = BinaryVariance::PlugIn;
    /// Worker threads for the replicate loop; 0 means default_thread_count().
    unsigned threads = 0;

    void validate() const;
};

/// n positive weights summing to n: standard exponentials divided by their
/// mean, i.e. a uniform Dirichlet draw scaled by n.
std::vector<double> dirichlet_weights(std::size_t n, Rng& rng);

/// Control-mean estimate for one set of source weights.
struct ControlEstimate {
    double mu_c = 0.0;
    BorrowAmount borrow;
    /// The rule was undefined (zero variance) and fell back to a = 0.
    bool degenerate = false;
};

/// Evaluates `rule` on the (optionally weighted) internal and external
/// samples. `w1` is the final external weight vector, already IPW-tilted
/// when applicable. Binary outcomes under MaxML use the grid search on
/// weighted counts and report the Beta posterior mean.
ControlEstimate estimate_control(const ControlSample& d0, const ControlSample& d1,
                                 std::optional<std::span<const double>> w0,
                                 std::optional<std::span<const double>> w1,
                                 const BorrowingRule& rule, BinaryVariance binary_variance);

struct ReplicateDraw {
    double mu_c = 0.0;
    double a = 0.0;
    bool degenerate = false;
    bool capped = false;
    bool ipw_failed = false;
};

/// One bootstrap replicate (weights for d0 then d1 drawn from `rng`).
ReplicateDraw bb_replicate(const ControlSample& d0, const ControlSample& d1,
                           const BorrowingRule& rule, bool use_ipw,
                           BinaryVariance binary_variance, Rng& rng);

struct PosteriorDraws {
    std::vector<double> mu_c;
    std::vector<double> a_star;
    std::optional<std::vector<double>> tau;

    double point = 0.0;    // mu_c on the unweighted data
    double point_a = 0.0;  // a on the unweighted data
    std::optional<double> point_a0;
    std::optional<double> point_tau;

    stats::Summary mu_c_summary;
    stats::Summary a_summary;
    std::optional<stats::Summary> tau_summary;

    std::size_t degenerate_count = 0;
    std::size_t capped_count = 0;
    std::size_t ipw_failures = 0;
    bool point_degenerate = false;

    std::optional<ipw::PsModel> ps_model;
    std::optional<ipw::BalanceTable> balance;

    std::size_t size() const noexcept { return mu_c.size(); }
    double capped_fraction() const {
        return mu_c.empty() ? 0.0 : static_cast<double>(capped_count) / mu_c.size();
    }
};

/// Runs B replicates. Replicate b uses its own stream derived from
/// (seed, b) and draws d0, d1 and then dt weights in that order, so the
/// output is identical for any thread count.
PosteriorDraws run(const ControlSample& d0, const ControlSample& d1,
                   const std::optional<ControlSample>& dt, const BootstrapConfig& cfg);

/// Same as run() for several rules sharing the same weight draws. The
/// rule in `cfg` is ignored.
std::vector<PosteriorDraws> run_rules(const ControlSample& d0, const ControlSample& d1,
                                      const std::optional<ControlSample>& dt,
                                      const BootstrapConfig& cfg,
                                      std::span<const BorrowingRule> rules);

enum class IntervalMethod { NormalApprox, Percentile };

struct IntervalEstimate {
    IntervalMethod method = IntervalMethod::Percentile;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    bool degenerate = false;  // zero spread; the interval collapsed to a point

    bool contains(double value) const { return lower <= value && value <= upper; }
};

/// NormalApprox: point +/- z sd(draws), centred on the plug-in point
/// estimate rather than the draw mean. Percentile: type-7 quantiles at
/// (1 - level)/2 and (1 + level)/2.
IntervalEstimate interval(std::span<const double> draws, double point, IntervalMethod method,
                          double level = 0.95);

}  // namespace borrow::bboot
