#include "borrow/bboot.hpp"

#include <algorithm>
#include <cmath>

#include "borrow/parallel.hpp"
#include "borrow/posterior.hpp"

namespace borrow::bboot {

void BootstrapConfig::validate() const {
    if (B < 2) throw Error(ErrorCode::InvalidConfig, "bootstrap needs B >= 2 replicates");
    rule.validate();
}

std::vector<double> dirichlet_weights(std::size_t n, Rng& rng) {
    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (double& v : w) {
        v = exp1(rng);
        total += v;
    }
    const double scale = static_cast<double>(n) / total;
    for (double& v : w) v *= scale;
    return w;
}

ControlEstimate estimate_control(const ControlSample& d0, const ControlSample& d1,
                                 std::optional<std::span<const double>> w0,
                                 std::optional<std::span<const double>> w1,
                                 const BorrowingRule& rule, BinaryVariance binary_variance) {
    if (d0.kind() != d1.kind()) {
        throw Error(ErrorCode::InvalidArgument, "internal and external outcome kinds differ");
    }
    const bool binary = d0.kind() == OutcomeKind::Binary;

    if (binary && rule.kind == RuleKind::MaxML) {
        const SummaryStats s0 = summarize(d0, w0);
        const SummaryStats s1 = summarize(d1, w1);
        const double n0 = static_cast<double>(s0.n);
        const double n1 = static_cast<double>(s1.n);
        const BinomialCounts c0{std::clamp(s0.mean * n0, 0.0, n0), n0};
        const BinomialCounts c1{std::clamp(s1.mean * n1, 0.0, n1), n1};
        const std::vector<double> grid = a0_grid(rule.grid_points);
        ControlEstimate est;
        est.borrow = maxml_binomial(c0, c1, grid, rule.cap);
        est.mu_c = posterior_binomial(c0.successes, n0, c1.successes, n1, *est.borrow.a0).mean();
        return est;
    }

    const SummaryStats s0 =
        binary ? summarize_binary(d0, binary_variance, w0) : summarize(d0, w0);
    const SummaryStats s1 =
        binary ? summarize_binary(d1, binary_variance, w1) : summarize(d1, w1);

    ControlEstimate est;
    try {
        // A constant external sample gives no usable variance scale, even for
        // rules whose formula stays finite.
        if (rule.kind != RuleKind::None && !(s1.var_of_mean > 0.0)) {
            throw Error(ErrorCode::DegenerateVariance, "external variance of the mean is zero");
        }
        est.borrow = choose_borrowing(rule, s0, s1);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVariance) throw;
        est.borrow = BorrowAmount{0.0, 0.0, std::nullopt, false};
        est.degenerate = true;
    }
    est.mu_c = combine(s0.mean, s1.mean, est.borrow.a);
    return est;
}

namespace {

void check_inputs(const ControlSample& d0, const ControlSample& d1, bool use_ipw) {
    if (d0.kind() != d1.kind()) {
        throw Error(ErrorCode::InvalidArgument, "internal and external outcome kinds differ");
    }
    if (use_ipw) {
        if (!d0.has_covariates() || !d1.has_covariates()) {
            throw Error(ErrorCode::InvalidArgument, "IPW needs covariates for both sources");
        }
        if (d0.covariates()->cols() != d1.covariates()->cols()) {
            throw Error(ErrorCode::InvalidArgument,
                        "internal and external covariate columns differ");
        }
    }
}

// External weights for one replicate: the Dirichlet draw, tilted by the
// propensity odds when IPW is on. nullopt signals a failed PS fit.
std::optional<std::vector<double>> tilt_external(const ControlSample& d0, const ControlSample& d1,
                                                 std::span<const double> w0,
                                                 std::span<const double> w1) {
    std::vector<double> case_w(w0.begin(), w0.end());
    case_w.insert(case_w.end(), w1.begin(), w1.end());
    try {
        const ipw::PsModel model = ipw::fit_ps(*d0.covariates(), *d1.covariates(), case_w);
        return ipw::ipw_weights(model, *d1.covariates(), w1);
    } catch (const Error&) {
        return std::nullopt;
    }
}

struct Drawn {
    std::vector<ReplicateDraw> per_rule;
    std::optional<double> mu_t;
};

Drawn draw_replicate(const ControlSample& d0, const ControlSample& d1,
                     const std::optional<ControlSample>& dt, std::span<const BorrowingRule> rules,
                     bool use_ipw, BinaryVariance binary_variance, Rng& rng) {
    const std::vector<double> w0 = dirichlet_weights(d0.size(), rng);
    std::vector<double> w1 = dirichlet_weights(d1.size(), rng);
    Drawn out;
    if (dt) {
        const std::vector<double> wt = dirichlet_weights(dt->size(), rng);
        double s = 0.0;
        for (std::size_t i = 0; i < wt.size(); ++i) s += wt[i] * dt->outcomes()[i];
        out.mu_t = s / static_cast<double>(dt->size());
    }

    bool ipw_failed = false;
    if (use_ipw) {
        if (auto tilted = tilt_external(d0, d1, w0, w1)) {
            w1 = std::move(*tilted);
        } else {
            ipw_failed = true;
        }
    }

    out.per_rule.reserve(rules.size());
    for (const BorrowingRule& rule : rules) {
        const ControlEstimate est =
            estimate_control(d0, d1, std::span<const double>(w0), std::span<const double>(w1),
                             rule, binary_variance);
        out.per_rule.push_back(
            {est.mu_c, est.borrow.a, est.degenerate, est.borrow.capped, ipw_failed});
    }
    return out;
}

}  // namespace

ReplicateDraw bb_replicate(const ControlSample& d0, const ControlSample& d1,
                           const BorrowingRule& rule, bool use_ipw,
                           BinaryVariance binary_variance, Rng& rng) {
    check_inputs(d0, d1, use_ipw);
    const BorrowingRule rules[] = {rule};
    return draw_replicate(d0, d1, std::nullopt, rules, use_ipw, binary_variance, rng).per_rule[0];
}

std::vector<PosteriorDraws> run_rules(const ControlSample& d0, const ControlSample& d1,
                                      const std::optional<ControlSample>& dt,
                                      const BootstrapConfig& cfg,
                                      std::span<const BorrowingRule> rules) {
    cfg.validate();
    for (const auto& r : rules) r.validate();
    check_inputs(d0, d1, cfg.use_ipw);
    const auto B = static_cast<std::size_t>(cfg.B);

    std::vector<Drawn> reps(B);
    parallel_for(
        B,
        [&](std::size_t b) {
            Rng rng = substream(cfg.seed, StreamTag::Bootstrap, b);
            reps[b] = draw_replicate(d0, d1, dt, rules, cfg.use_ipw, cfg.binary_variance, rng);
        },
        cfg.threads == 0 ? default_thread_count() : cfg.threads);

    // Point estimate on the unweighted data.
    std::optional<std::vector<double>> point_w1;
    std::optional<ipw::PsModel> ps_model;
    std::optional<ipw::BalanceTable> balance_table;
    if (cfg.use_ipw) {
        ps_model = ipw::fit_ps(*d0.covariates(), *d1.covariates());
        point_w1 = ipw::ipw_weights(*ps_model, *d1.covariates());
        balance_table = ipw::balance(*d0.covariates(), *d1.covariates(), *point_w1);
    }
    std::optional<double> mu_t_point;
    if (dt) mu_t_point = stats::mean(dt->outcomes());

    std::vector<PosteriorDraws> out(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        PosteriorDraws& pd = out[r];
        pd.mu_c.resize(B);
        pd.a_star.resize(B);
        if (dt) pd.tau.emplace(B);
        for (std::size_t b = 0; b < B; ++b) {
            const ReplicateDraw& rd = reps[b].per_rule[r];
            pd.mu_c[b] = rd.mu_c;
            pd.a_star[b] = rd.a;
            if (dt) (*pd.tau)[b] = *reps[b].mu_t - rd.mu_c;
            pd.degenerate_count += rd.degenerate ? 1 : 0;
            pd.capped_count += rd.capped ? 1 : 0;
            pd.ipw_failures += rd.ipw_failed ? 1 : 0;
        }

        std::optional<std::span<const double>> w1_span;
        if (point_w1) w1_span = std::span<const double>(*point_w1);
        const ControlEstimate est =
            estimate_control(d0, d1, std::nullopt, w1_span, rules[r], cfg.binary_variance);
        pd.point = est.mu_c;
        pd.point_a = est.borrow.a;
        pd.point_a0 = est.borrow.a0;
        pd.point_degenerate = est.degenerate;
        if (mu_t_point) pd.point_tau = *mu_t_point - est.mu_c;

        pd.mu_c_summary = stats::summarize_draws(pd.mu_c);
        pd.a_summary = stats::summarize_draws(pd.a_star);
        if (pd.tau) pd.tau_summary = stats::summarize_draws(*pd.tau);
        pd.ps_model = ps_model;
        pd.balance = balance_table;
    }
    return out;
}

PosteriorDraws run(const ControlSample& d0, const ControlSample& d1,
                   const std::optional<ControlSample>& dt, const BootstrapConfig& cfg) {
    const BorrowingRule rules[] = {cfg.rule};
    return std::move(run_rules(d0, d1, dt, cfg, rules).front());
}

IntervalEstimate interval(std::span<const double> draws, double point, IntervalMethod method,
                          double level) {
    if (draws.size() < 2) throw Error(ErrorCode::InvalidArgument, "interval needs >= 2 draws");
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "interval level must lie in (0, 1)");
    }
    IntervalEstimate ci;
    ci.method = method;
    ci.level = level;
    if (method == IntervalMethod::NormalApprox) {
        const double sd = stats::sd(draws);
        const double z = stats::normal_quantile((1.0 + level) / 2.0);
        ci.lower = point - z * sd;
        ci.upper = point + z * sd;
        ci.degenerate = sd == 0.0;
    } else {
        std::vector<double> sorted(draws.begin(), draws.end());
        std::sort(sorted.begin(), sorted.end());
        ci.lower = stats::quantile_sorted(sorted, (1.0 - level) / 2.0);
        ci.upper = stats::quantile_sorted(sorted, (1.0 + level) / 2.0);
        ci.degenerate = sorted.front() == sorted.back();
    }
    return ci;
}

}  // namespace borrow::bboot
