#include "borrow/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "borrow/bboot.hpp"
#include "borrow/cli/csv.hpp"
#include "borrow/cli/sim_config.hpp"
#include "borrow/posterior.hpp"
#include "borrow/sim.hpp"

namespace borrow::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

SampleOut sample_out(const ControlSample& s) {
    const SummaryStats st = summarize(s);
    return {std::string(to_string(s.source())), st.n, st.mean, st.var_of_mean};
}

}  // namespace

AnalysisReport analyze(const AnalyzeOptions& opt) {
    LoadedData data = load_dataset(opt.data);
    if (opt.ipw && opt.data.covariates.empty()) {
        throw CliError(2, "--ipw requires --covariates");
    }

    std::vector<BorrowingRule> rules;
    for (RuleKind k : opt.rules) {
        BorrowingRule r{k, opt.eta, opt.cap, opt.grid_points};
        try {
            r.validate();
        } catch (const Error& e) {
            throw CliError(2, e.what());
        }
        rules.push_back(r);
    }

    bboot::BootstrapConfig cfg;
    cfg.B = opt.boots;
    cfg.seed = opt.seed;
    cfg.use_ipw = opt.ipw;
    cfg.binary_variance = opt.binary_variance;
    cfg.threads = opt.threads;
    if (cfg.B < 2) throw CliError(2, "--boots must be at least 2");
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw CliError(2, "--level must lie in (0, 1)");

    std::vector<bboot::PosteriorDraws> draws;
    try {
        draws = bboot::run_rules(data.internal, data.external, data.treated, cfg, rules);
    } catch (const Error& e) {
        const bool degenerate = e.code() == ErrorCode::SingularDesign ||
                                e.code() == ErrorCode::DegenerateSample ||
                                e.code() == ErrorCode::DegenerateVariance ||
                                e.code() == ErrorCode::DegenerateWeights;
        throw CliError(degenerate ? 3 : 2, e.what());
    }

    AnalysisReport report;
    auto& m = report.metadata;
    m.tool_version = kToolVersion;
    m.seed = opt.seed;
    m.boots = opt.boots;
    m.cap = opt.cap;
    m.eta = opt.eta;
    m.grid_points = opt.grid_points;
    m.level = opt.level;
    m.ipw = opt.ipw;
    m.outcome_kind = std::string(to_string(data.kind));
    m.binary_variance = std::string(to_string(opt.binary_variance));
    for (const auto& r : rules) m.rules.push_back(std::string(to_string(r.kind)));
    m.outcome_column = opt.data.outcome;
    m.covariates = opt.data.covariates;
    m.inputs = data.fingerprints;

    report.samples.push_back(sample_out(data.internal));
    report.samples.push_back(sample_out(data.external));
    if (data.treated) report.samples.push_back(sample_out(*data.treated));

    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& pd = draws[i];
        RuleReport rr;
        rr.rule = std::string(to_string(rules[i].kind));
        rr.eta = rules[i].eta;
        rr.cap = rules[i].cap;
        rr.mu_c = summarize_draws(pd.mu_c, pd.point, opt.level);
        if (pd.tau) rr.tau = summarize_draws(*pd.tau, *pd.point_tau, opt.level);
        rr.point_a = pd.point_a;
        rr.point_a0 = pd.point_a0;
        rr.point_degenerate = pd.point_degenerate;
        rr.a_mean = pd.a_summary.mean;
        rr.a_sd = pd.a_summary.sd;
        rr.capped_fraction = pd.capped_fraction();
        rr.degenerate_replicates = pd.degenerate_count;
        rr.ipw_failures = pd.ipw_failures;
        rr.negligible_borrowing =
            rules[i].kind != RuleKind::None && rr.a_mean < kNegligibleBorrowing;

        if (pd.point_degenerate) {
            report.warnings.push_back(rr.rule +
                                      ": zero variance on the observed data; borrowing set to 0");
        }
        if (pd.degenerate_count > 0) {
            report.warnings.push_back(rr.rule + ": " + std::to_string(pd.degenerate_count) +
                                      " bootstrap replicates had zero variance and used a = 0");
        }
        if (pd.ipw_failures > 0) {
            report.warnings.push_back(rr.rule + ": " + std::to_string(pd.ipw_failures) +
                                      " replicates could not fit the propensity model; IPW skipped");
        }
        if (rr.negligible_borrowing) {
            report.warnings.push_back(rr.rule + ": negligible borrowing (mean a < " +
                                      format_number(kNegligibleBorrowing) + ")");
        }
        report.rules.push_back(std::move(rr));
    }

    if (!draws.empty() && draws[0].ps_model) {
        const auto& ps = *draws[0].ps_model;
        PsModelOut out;
        out.terms.push_back("(intercept)");
        for (const auto& c : opt.data.covariates) out.terms.push_back(c);
        out.coefficients = ps.coefficients;
        out.converged = ps.converged;
        out.iterations = ps.iterations;
        out.deviance = ps.deviance;
        out.separation = ps.separation;
        if (ps.separation) report.warnings.push_back("propensity model: separation detected");
        if (!ps.converged) report.warnings.push_back("propensity model did not converge");
        report.ps_model = std::move(out);

        ipw::BalanceTable table = *draws[0].balance;
        for (std::size_t j = 0; j < table.size() && j < opt.data.covariates.size(); ++j) {
            table[j].covariate = opt.data.covariates[j];
        }
        report.balance = std::move(table);
    }
    return report;
}

std::vector<CurveRow> curve(const CurveOptions& opt) {
    if (!(opt.sigma0 > 0.0) || !(opt.sigma1 > 0.0)) {
        throw CliError(2, "--sigma0 and --sigma1 must be positive");
    }
    if (!(opt.delta_max >= 0.0) || opt.steps < 1 || !(opt.eta >= 0.0)) {
        throw CliError(2, "--delta-max must be >= 0, --steps >= 1 and --eta >= 0");
    }
    const double v0 = opt.sigma0 * opt.sigma0;
    const double v1 = opt.sigma1 * opt.sigma1;
    auto row_at = [&](double delta) {
        const double a = optimal_a(v0, v1, delta, opt.eta);
        const MseProfile prof = mse_profile(a, v0, v1, delta, opt.eta);
        return CurveRow{delta, a, prof.variance, prof.bias, prof.bias * prof.bias, prof.mse, false};
    };

    std::vector<CurveRow> rows;
    for (int k = 0; k <= opt.steps; ++k) {
        rows.push_back(row_at(opt.delta_max * k / opt.steps));
    }
    if (opt.eta > 0.0) {
        const double peak = std::sqrt(v0 + v1) / opt.eta;
        if (peak <= opt.delta_max) {
            auto it = std::lower_bound(rows.begin(), rows.end(), peak,
                                       [](const CurveRow& r, double d) { return r.delta < d; });
            if (it != rows.end() && it->delta == peak) {
                it->bias_max = true;
            } else {
                CurveRow r = row_at(peak);
                r.bias_max = true;
                rows.insert(it, r);
            }
        }
    }
    return rows;
}

void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows) {
    write_csv_row(os, {"delta", "a_star", "variance", "bias", "bias_sq", "mse", "bias_max"});
    for (const auto& r : rows) {
        write_csv_row(os, {format_number(r.delta), format_number(r.a_star),
                           format_number(r.variance), format_number(r.bias),
                           format_number(r.bias_sq), format_number(r.mse),
                           r.bias_max ? "1" : "0"});
    }
}

namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << s << "\n";
    return s;
}

// Writes through a file when `path` is set, otherwise to `out`.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
    if (path.empty()) {
        fn(out);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CliError(2, "cannot write '" + path + "'");
    fn(f);
}

const char* kMetricsHelp =
    "Metrics CSV columns (one row per scenario x rule):\n"
    "  scenario_id..eta  scenario settings; n1 = n0 * n1_multiplier\n"
    "  truth             true internal control mean; truth_source exact|mc-oracle\n"
    "  mean_estimate, bias, variance, mse   over simulations, with se_variance, se_mse\n"
    "  mean_a, capped_fraction              borrowing weight on the observed data\n"
    "  coverage_normal, coverage_percentile interval coverage (NA when nboot < 2),\n"
    "                                       with se_coverage_*\n"
    "  nob_variance, nob_mse, nob_benchmark no-borrowing reference (empirical, analytic)\n"
    "  failures, degenerate                 failed simulations, zero-variance fallbacks\n";

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic borrowing of external controls: analysis, simulation and curves"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // analyze
    AnalyzeOptions aopt;
    std::string internal, external, treated, data, rule_list = "minmse", covariates;
    std::string outcome_kind = "auto", binary_variance = "plugin", format = "json", aout;
    std::optional<std::uint64_t> aseed;
    auto* analyze_cmd = app.add_subcommand("analyze", "Bayesian-bootstrap analysis of CSV data");
    analyze_cmd->add_option("--internal", internal, "CSV with the internal (trial) controls");
    analyze_cmd->add_option("--external", external, "CSV with the external controls");
    analyze_cmd->add_option("--treated", treated, "CSV with the treated arm (enables tau)");
    analyze_cmd->add_option("--data", data, "single CSV split by --arm-column");
    analyze_cmd->add_option("--arm-column", aopt.data.arm_column, "arm column of --data");
    analyze_cmd->add_option("--internal-value", aopt.data.internal_value, "arm value of internal controls")
        ->default_val("internal");
    analyze_cmd->add_option("--external-value", aopt.data.external_value, "arm value of external controls")
        ->default_val("external");
    std::string treated_value;
    analyze_cmd->add_option("--treated-value", treated_value, "arm value of treated subjects");
    analyze_cmd->add_option("--outcome", aopt.data.outcome, "outcome column")->required();
    analyze_cmd->add_option("--covariates", covariates, "comma-separated covariate columns");
    analyze_cmd->add_option("--outcome-kind", outcome_kind, "auto|continuous|binary")
        ->check(CLI::IsMember({"auto", "continuous", "binary"}));
    analyze_cmd->add_option("--rule", rule_list, "comma-separated: maxml,cminmse,minmse,none,full");
    analyze_cmd->add_option("--eta", aopt.eta, "bias weight for minmse")->default_val(1.0);
    analyze_cmd->add_option("--cap", aopt.cap, "cap on a (fraction of internal data)")->default_val(1.0);
    analyze_cmd->add_option("--grid-points", aopt.grid_points, "a0 grid size for binary maxml")
        ->default_val(51);
    analyze_cmd->add_option("--boots", aopt.boots, "bootstrap replicates")->default_val(1000);
    analyze_cmd->add_option("--seed", aseed, "random seed (generated and printed when omitted)");
    analyze_cmd->add_flag("--ipw", aopt.ipw, "tilt external controls by propensity odds");
    analyze_cmd->add_option("--level", aopt.level, "interval level")->default_val(0.95);
    analyze_cmd->add_option("--binary-variance", binary_variance, "plugin|beta|sample")
        ->check(CLI::IsMember({"plugin", "beta", "sample"}));
    analyze_cmd->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    analyze_cmd->add_option("--out", aout, "output file (default stdout)");
    analyze_cmd->add_option("--threads", aopt.threads, "worker threads (default $BORROW_THREADS)");

    // simulate
    std::string config_path, sout;
    std::optional<std::uint64_t> sseed;
    unsigned sthreads = 0;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run Monte-Carlo scenarios from a JSON config");
    simulate_cmd->add_option("--config", config_path, "JSON scenario config")->required();
    simulate_cmd->add_option("--out", sout, "metrics CSV (default stdout)");
    simulate_cmd->add_option("--seed", sseed, "base seed (overrides the config's top-level seed)");
    simulate_cmd->add_option("--threads", sthreads, "worker threads (default $BORROW_THREADS)");
    simulate_cmd->footer(kMetricsHelp);

    // curve
    CurveOptions copt;
    std::string cout_path;
    std::optional<std::uint64_t> cseed;
    auto* curve_cmd = app.add_subcommand("curve", "Analytic a*, bias and MSE as functions of delta");
    curve_cmd->add_option("--sigma0", copt.sigma0, "sd of the internal mean estimator")->default_val(1.0);
    curve_cmd->add_option("--sigma1", copt.sigma1, "sd of the external mean estimator")->default_val(1.0);
    curve_cmd->add_option("--delta-max", copt.delta_max, "largest delta")->default_val(3.0);
    curve_cmd->add_option("--eta", copt.eta, "bias weight")->default_val(1.0);
    curve_cmd->add_option("--steps", copt.steps, "grid intervals")->default_val(300);
    curve_cmd->add_option("--seed", cseed, "accepted for uniformity; the curve is deterministic");
    curve_cmd->add_option("--out", cout_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::ostringstream help_out, help_err;
            app.exit(e, help_out, help_err);
            out << help_out.str() << help_err.str();
            return 0;
        }
        std::ostringstream o, eo;
        app.exit(e, o, eo);
        err << o.str() << eo.str();
        return 2;
    }

    try {
        if (analyze_cmd->parsed()) {
            if (!internal.empty()) aopt.data.internal_path = internal;
            if (!external.empty()) aopt.data.external_path = external;
            if (!treated.empty()) aopt.data.treated_path = treated;
            if (!data.empty()) aopt.data.data_path = data;
            if (!treated_value.empty()) aopt.data.treated_value = treated_value;
            aopt.data.covariates = split_list(covariates);
            aopt.data.kind = outcome_kind == "binary"       ? OutcomeKindChoice::Binary
                             : outcome_kind == "continuous" ? OutcomeKindChoice::Continuous
                                                            : OutcomeKindChoice::Auto;
            aopt.rules.clear();
            for (const auto& name : split_list(rule_list)) {
                try {
                    aopt.rules.push_back(rule_kind_from_string(name));
                } catch (const Error& e) {
                    throw CliError(2, e.what());
                }
            }
            if (aopt.rules.empty()) throw CliError(2, "--rule needs at least one rule");
            aopt.binary_variance = binary_variance_from_string(binary_variance);
            aopt.seed = resolve_seed(aseed, err);

            const AnalysisReport report = analyze(aopt);
            for (const auto& w : report.warnings) err << "warning: " << w << "\n";
            emit(aout, out, [&](std::ostream& os) {
                if (format == "csv") {
                    write_report_csv(os, report);
                } else {
                    os << to_json(report).dump(2) << "\n";
                }
            });
            return 0;
        }

        if (simulate_cmd->parsed()) {
            std::ifstream in(config_path);
            if (!in) throw CliError(2, "cannot open config '" + config_path + "'");
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw CliError(2, std::string("config is not valid JSON: ") + e.what());
            }
            std::optional<std::uint64_t> base = sseed ? sseed : config_seed(doc);
            const std::uint64_t seed = resolve_seed(base, err);
            auto scenarios = parse_sim_config(doc, seed, seed);
            std::ostringstream csv;
            write_metrics_header(csv);
            for (auto& sc : scenarios) {
                sc.threads = sthreads;
                sim::ScenarioResult res;
                try {
                    res = sim::run_scenario(sc);
                } catch (const Error& e) {
                    throw CliError(2, e.what());
                }
                for (const auto& row : res.rows) write_metrics_row(csv, row);
            }
            emit(sout, out, [&](std::ostream& os) { os << csv.str(); });
            return 0;
        }

        if (curve_cmd->parsed()) {
            resolve_seed(cseed, err);
            const auto rows = curve(copt);
            emit(cout_path, out, [&](std::ostream& os) { write_curve_csv(os, rows); });
            return 0;
        }
    } catch (const CliError& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace borrow::cli
