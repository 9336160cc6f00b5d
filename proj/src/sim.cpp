#include "borrow/sim.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "borrow/bboot.hpp"
#include "borrow/parallel.hpp"
#include "borrow/stats.hpp"

namespace borrow::sim {

std::string_view to_string(OutcomeFamily family) {
    switch (family) {
        case OutcomeFamily::Normal: return "normal";
        case OutcomeFamily::Binary: return "binary";
        case OutcomeFamily::StudentT: return "t";
    }
    return "unknown";
}

OutcomeFamily outcome_family_from_string(std::string_view name) {
    if (name == "normal") return OutcomeFamily::Normal;
    if (name == "binary") return OutcomeFamily::Binary;
    if (name == "t" || name == "student_t") return OutcomeFamily::StudentT;
    throw Error(ErrorCode::InvalidConfig, "unknown outcome family '" + std::string(name) + "'");
}

double default_beta(OutcomeFamily family) {
    return family == OutcomeFamily::Binary ? 0.2 : 0.5;
}

namespace {

// Draws the n x p covariates and returns them with the linear predictor.
std::pair<std::optional<Covariates>, std::vector<double>> draw_covariates(std::size_t n, int p,
                                                                          double beta, Rng& rng) {
    std::vector<double> lin(n, 0.0);
    if (p <= 0) return {std::nullopt, lin};
    std::normal_distribution<double> norm(0.0, 1.0);
    Covariates x(n, static_cast<std::size_t>(p));
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < p; ++j) {
            const double v = norm(rng);
            x(i, j) = v;
            s += v;
        }
        lin[i] = beta * s;
    }
    return {std::move(x), std::move(lin)};
}

template <class Noise>
ControlSample gen_continuous(std::size_t n, double shift, int p, double beta, Rng& rng,
                             SourceLabel source, Noise&& noise) {
    auto [x, lin] = draw_covariates(n, p, beta, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = lin[i] + shift + noise(rng);
    return ControlSample(std::move(y), OutcomeKind::Continuous, source, std::move(x));
}

}  // namespace

ControlSample gen_normal(std::size_t n, double shift, int p, double beta, Rng& rng,
                         SourceLabel source) {
    std::normal_distribution<double> noise(0.0, 1.0);
    return gen_continuous(n, shift, p, beta, rng, source, noise);
}

ControlSample gen_student_t(std::size_t n, double shift, int p, double beta, double df, Rng& rng,
                            SourceLabel source) {
    if (!(df > 2.0)) throw Error(ErrorCode::InvalidConfig, "Student-t df must exceed 2");
    std::student_t_distribution<double> noise(df);
    return gen_continuous(n, shift, p, beta, rng, source, noise);
}

ControlSample gen_binary(std::size_t n, double shift, double p0, int p, double beta, Rng& rng,
                         SourceLabel source) {
    const double rate = p0 + shift;
    if (!(rate > 0.0 && rate < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "binary success rate p0 + delta must lie in (0, 1)");
    }
    const double logit = std::log(rate / (1.0 - rate));
    auto [x, lin] = draw_covariates(n, p, beta, rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(lin[i] - logit));
        y[i] = unif(rng) < prob ? 1.0 : 0.0;
    }
    return ControlSample(std::move(y), OutcomeKind::Binary, source, std::move(x));
}

double binary_true_rate(double p0, int p, double beta) {
    if (p <= 0 || beta == 0.0) return p0;
    static std::mutex mutex;
    static std::map<std::tuple<double, int, double>, double> cache;
    const auto key = std::make_tuple(p0, p, beta);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    // x'beta ~ N(0, p beta^2), so one normal draw per evaluation suffices.
    constexpr std::size_t kDraws = 10'000'000;
    const double scale = std::sqrt(static_cast<double>(p)) * std::abs(beta);
    const double logit = std::log(p0 / (1.0 - p0));
    Rng rng = substream(0x5EEDULL, StreamTag::Oracle, 0);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> block(4096);
    std::vector<double> partial;
    for (std::size_t done = 0; done < kDraws; done += block.size()) {
        const std::size_t m = std::min(block.size(), kDraws - done);
        for (std::size_t i = 0; i < m; ++i) {
            block[i] = 1.0 / (1.0 + std::exp(scale * norm(rng) - logit));
        }
        partial.push_back(stats::pairwise_sum(std::span<const double>(block.data(), m)));
    }
    const double rate = stats::pairwise_sum(partial) / static_cast<double>(kDraws);
    std::lock_guard lock(mutex);
    cache.emplace(key, rate);
    return rate;
}

std::vector<std::string> ScenarioConfig::problems() const {
    std::vector<std::string> out;
    if (n0 < 2) out.push_back("n0: must be >= 2");
    if (n1_multiplier < 1) out.push_back("n1_multiplier: must be >= 1");
    if (p < 0) out.push_back("p: must be >= 0");
    if (nsim < 2) out.push_back("nsim: must be >= 2");
    if (nboot < 0) out.push_back("nboot: must be >= 0");
    if (!(cap > 0.0)) out.push_back("cap: must be > 0");
    if (!(level > 0.0 && level < 1.0)) out.push_back("level: must lie in (0, 1)");
    if (rules.empty()) out.push_back("rules: at least one rule is required");
    for (const auto& r : rules) {
        if (!(r.eta >= 0.0)) out.push_back("rules.eta: must be >= 0");
        if (r.grid_points < 1) out.push_back("rules.grid_points: must be >= 1");
    }
    if (outcome == OutcomeFamily::Binary) {
        if (!(p0 > 0.0 && p0 < 1.0)) out.push_back("p0: must lie in (0, 1)");
        if (!(p0 + delta > 0.0 && p0 + delta < 1.0)) out.push_back("delta: p0 + delta must lie in (0, 1)");
    }
    if (outcome == OutcomeFamily::StudentT && !(df > 2.0)) out.push_back("df: must exceed 2");
    return out;
}

void ScenarioConfig::validate() const {
    const auto msgs = problems();
    if (msgs.empty()) return;
    std::ostringstream os;
    os << "invalid scenario";
    if (!id.empty()) os << " '" << id << "'";
    for (const auto& m : msgs) os << "; " << m;
    throw Error(ErrorCode::InvalidConfig, os.str());
}

namespace {

struct SimDraw {
    bool failed = false;
    double nob = 0.0;
    std::vector<double> estimate;
    std::vector<double> a;
    std::vector<char> capped;
    std::vector<char> degenerate;
    std::vector<char> cover_normal;
    std::vector<char> cover_percentile;
};

ControlSample generate(const ScenarioConfig& cfg, std::size_t n, double shift, Rng& rng,
                       SourceLabel source) {
    const double beta = cfg.beta_value();
    switch (cfg.outcome) {
        case OutcomeFamily::Normal: return gen_normal(n, shift, cfg.p, beta, rng, source);
        case OutcomeFamily::Binary: return gen_binary(n, shift, cfg.p0, cfg.p, beta, rng, source);
        case OutcomeFamily::StudentT:
            return gen_student_t(n, shift, cfg.p, beta, cfg.df, rng, source);
    }
    throw Error(ErrorCode::InvalidConfig, "unknown outcome family");
}

double analytic_benchmark(const ScenarioConfig& cfg, double truth) {
    const double beta = cfg.beta_value();
    const double cov = cfg.p * beta * beta;
    switch (cfg.outcome) {
        case OutcomeFamily::Normal: return (1.0 + cov) / cfg.n0;
        case OutcomeFamily::StudentT: return (cfg.df / (cfg.df - 2.0) + cov) / cfg.n0;
        case OutcomeFamily::Binary: return truth * (1.0 - truth) / cfg.n0;
    }
    return 0.0;
}

// Variance (n - 1) and Monte-Carlo SE of the variance and of the mean square.
struct ErrorMoments {
    double mean = 0.0, variance = 0.0, se_variance = 0.0, mse = 0.0, se_mse = 0.0;
};

ErrorMoments moments(const std::vector<double>& e) {
    ErrorMoments m;
    const double n = static_cast<double>(e.size());
    m.mean = stats::mean(e);
    m.variance = stats::variance(e);
    std::vector<double> dev2(e.size()), sq(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        dev2[i] = (e[i] - m.mean) * (e[i] - m.mean);
        sq[i] = e[i] * e[i];
    }
    m.se_variance = stats::sd(dev2) / std::sqrt(n);
    m.mse = stats::mean(sq);
    m.se_mse = stats::sd(sq) / std::sqrt(n);
    return m;
}

double fraction(const std::vector<SimDraw>& draws, std::size_t r,
                std::vector<char> SimDraw::*field) {
    double hits = 0.0, total = 0.0;
    for (const auto& d : draws) {
        if (d.failed) continue;
        hits += (d.*field)[r];
        total += 1.0;
    }
    return total > 0.0 ? hits / total : 0.0;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<BorrowingRule> rules = cfg.rules;
    for (auto& r : rules) r.cap = cfg.cap;

    const auto n0 = static_cast<std::size_t>(cfg.n0);
    const auto n1 = static_cast<std::size_t>(cfg.n1());
    const bool binary = cfg.outcome == OutcomeFamily::Binary;
    const bool oracle_truth = binary && cfg.p > 0 && cfg.beta_value() != 0.0;
    const double truth = binary ? binary_true_rate(cfg.p0, cfg.p, cfg.beta_value()) : 0.0;
    const bool with_boot = cfg.nboot >= 2;
    const std::size_t R = rules.size();

    std::vector<SimDraw> draws(static_cast<std::size_t>(cfg.nsim));
    parallel_for(
        draws.size(),
        [&](std::size_t s) {
            SimDraw& d = draws[s];
            try {
                Rng rng = substream(cfg.seed, StreamTag::Simulation, s);
                const ControlSample d0 = generate(cfg, n0, 0.0, rng, SourceLabel::Internal);
                const ControlSample d1 = generate(cfg, n1, cfg.delta, rng, SourceLabel::External);
                d.nob = stats::mean(d0.outcomes());
                d.estimate.resize(R);
                d.a.resize(R);
                d.capped.resize(R);
                d.degenerate.resize(R);
                for (std::size_t r = 0; r < R; ++r) {
                    const auto est = bboot::estimate_control(d0, d1, std::nullopt, std::nullopt,
                                                             rules[r], cfg.binary_variance);
                    d.estimate[r] = est.mu_c;
                    d.a[r] = est.borrow.a;
                    d.capped[r] = est.borrow.capped;
                    d.degenerate[r] = est.degenerate;
                }
                if (with_boot) {
                    bboot::BootstrapConfig bc;
                    bc.B = cfg.nboot;
                    bc.seed = splitmix64(cfg.seed ^ splitmix64(s + 1));
                    bc.binary_variance = cfg.binary_variance;
                    bc.threads = 1;
                    const auto pds = bboot::run_rules(d0, d1, std::nullopt, bc, rules);
                    d.cover_normal.resize(R);
                    d.cover_percentile.resize(R);
                    for (std::size_t r = 0; r < R; ++r) {
                        const auto ci_n = bboot::interval(pds[r].mu_c, d.estimate[r],
                                                          bboot::IntervalMethod::NormalApprox,
                                                          cfg.level);
                        const auto ci_p = bboot::interval(pds[r].mu_c, d.estimate[r],
                                                          bboot::IntervalMethod::Percentile,
                                                          cfg.level);
                        d.cover_normal[r] = ci_n.contains(truth);
                        d.cover_percentile[r] = ci_p.contains(truth);
                    }
                }
            } catch (const Error&) {
                d = SimDraw{};
                d.failed = true;
            }
        },
        cfg.threads == 0 ? default_thread_count() : cfg.threads);

    ScenarioResult result;
    result.truth = truth;
    result.errors.assign(R, {});
    int failures = 0;
    for (const auto& d : draws) {
        if (d.failed) {
            ++failures;
            continue;
        }
        result.nob_errors.push_back(d.nob - truth);
        for (std::size_t r = 0; r < R; ++r) result.errors[r].push_back(d.estimate[r] - truth);
    }
    if (result.nob_errors.size() < 2) {
        throw Error(ErrorCode::InvalidConfig,
                    "scenario '" + cfg.id + "': fewer than two successful simulations");
    }
    const ErrorMoments nob = moments(result.nob_errors);
    const double ok = static_cast<double>(result.nob_errors.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t r = 0; r < R; ++r) {
        const ErrorMoments m = moments(result.errors[r]);
        MetricsRow row;
        row.scenario_id = cfg.id;
        row.outcome = std::string(to_string(cfg.outcome));
        row.df = cfg.outcome == OutcomeFamily::StudentT ? cfg.df : 0.0;
        row.p = cfg.p;
        row.beta = cfg.beta_value();
        row.n0 = cfg.n0;
        row.n1 = cfg.n1();
        row.delta = cfg.delta;
        row.p0 = binary ? cfg.p0 : 0.0;
        row.cap = cfg.cap;
        row.nsim = cfg.nsim;
        row.nboot = cfg.nboot;
        row.seed = cfg.seed;
        row.rule = std::string(to_string(rules[r].kind));
        row.eta = rules[r].eta;
        row.truth = truth;
        row.truth_source = oracle_truth ? "mc-oracle" : "exact";
        row.mean_estimate = truth + m.mean;
        row.bias = m.mean;
        row.variance = m.variance;
        row.se_variance = m.se_variance;
        row.mse = m.mse;
        row.se_mse = m.se_mse;

        double a_sum = 0.0;
        int degenerate = 0;
        for (const auto& d : draws) {
            if (d.failed) continue;
            a_sum += d.a[r];
            degenerate += d.degenerate[r];
        }
        row.mean_a = a_sum / ok;
        row.capped_fraction = fraction(draws, r, &SimDraw::capped);
        row.degenerate = degenerate;
        if (with_boot) {
            row.coverage_normal = fraction(draws, r, &SimDraw::cover_normal);
            row.coverage_percentile = fraction(draws, r, &SimDraw::cover_percentile);
            row.se_coverage_normal =
                std::sqrt(row.coverage_normal * (1.0 - row.coverage_normal) / ok);
            row.se_coverage_percentile =
                std::sqrt(row.coverage_percentile * (1.0 - row.coverage_percentile) / ok);
        } else {
            row.coverage_normal = row.coverage_percentile = nan;
            row.se_coverage_normal = row.se_coverage_percentile = nan;
        }
        row.nob_variance = nob.variance;
        row.nob_mse = nob.mse;
        row.nob_benchmark = analytic_benchmark(cfg, truth);
        row.failures = failures;
        result.rows.push_back(std::move(row));
    }
    return result;
}

double paired_mse_diff_se(const std::vector<double>& errors_a,
                          const std::vector<double>& errors_b) {
    if (errors_a.size() != errors_b.size() || errors_a.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "paired SE needs equal-length error vectors");
    }
    std::vector<double> diff(errors_a.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
    }
    return stats::sd(diff) / std::sqrt(static_cast<double>(diff.size()));
}

}  // namespace borrow::sim
