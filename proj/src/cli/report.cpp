#include "borrow/cli/report.hpp"

#include <limits>
#include <ostream>

#include "borrow/cli/csv.hpp"
#include "borrow/stats.hpp"

namespace borrow::cli {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

json interval_json(const IntervalOut& ci) {
    return {{"lower", ci.lower}, {"upper", ci.upper}, {"degenerate", ci.degenerate}};
}

IntervalOut interval_from(const json& j) {
    return {j.at("lower").get<double>(), j.at("upper").get<double>(),
            j.at("degenerate").get<bool>()};
}

json draws_json(const DrawSummary& d) {
    return {{"point", d.point},
            {"mean", d.mean},
            {"median", d.median},
            {"sd", d.sd},
            {"normal_ci", interval_json(d.normal_ci)},
            {"percentile_ci", interval_json(d.percentile_ci)}};
}

DrawSummary draws_from(const json& j) {
    return {j.at("point").get<double>(),   j.at("mean").get<double>(),
            j.at("median").get<double>(),  j.at("sd").get<double>(),
            interval_from(j.at("normal_ci")), interval_from(j.at("percentile_ci"))};
}

}  // namespace

DrawSummary summarize_draws(std::span<const double> draws, double point, double level) {
    const stats::Summary s = stats::summarize_draws(draws);
    const auto n = bboot::interval(draws, point, bboot::IntervalMethod::NormalApprox, level);
    const auto p = bboot::interval(draws, point, bboot::IntervalMethod::Percentile, level);
    return {point, s.mean, s.median, s.sd, {n.lower, n.upper, n.degenerate},
            {p.lower, p.upper, p.degenerate}};
}

json to_json(const AnalysisReport& r) {
    json j;
    const auto& m = r.metadata;
    json inputs = json::array();
    for (const auto& f : m.inputs) {
        inputs.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a64}, {"rows", f.rows}});
    }
    j["metadata"] = {{"tool_version", m.tool_version},
                     {"seed", m.seed},
                     {"boots", m.boots},
                     {"cap", m.cap},
                     {"eta", m.eta},
                     {"grid_points", m.grid_points},
                     {"level", m.level},
                     {"ipw", m.ipw},
                     {"outcome_kind", m.outcome_kind},
                     {"binary_variance", m.binary_variance},
                     {"rules", m.rules},
                     {"outcome_column", m.outcome_column},
                     {"covariates", m.covariates},
                     {"inputs", inputs}};

    j["samples"] = json::array();
    for (const auto& s : r.samples) {
        j["samples"].push_back(
            {{"source", s.source}, {"n", s.n}, {"mean", s.mean}, {"var_of_mean", s.var_of_mean}});
    }

    j["rules"] = json::array();
    for (const auto& rr : r.rules) {
        j["rules"].push_back({{"rule", rr.rule},
                              {"eta", rr.eta},
                              {"cap", rr.cap},
                              {"mu_c", draws_json(rr.mu_c)},
                              {"tau", rr.tau ? draws_json(*rr.tau) : json(nullptr)},
                              {"point_a", rr.point_a},
                              {"point_a0", opt(rr.point_a0)},
                              {"point_degenerate", rr.point_degenerate},
                              {"a_mean", rr.a_mean},
                              {"a_sd", rr.a_sd},
                              {"capped_fraction", rr.capped_fraction},
                              {"degenerate_replicates", rr.degenerate_replicates},
                              {"ipw_failures", rr.ipw_failures},
                              {"negligible_borrowing", rr.negligible_borrowing}});
    }

    if (r.ps_model) {
        const auto& ps = *r.ps_model;
        j["ps_model"] = {{"terms", ps.terms},
                         {"coefficients", ps.coefficients},
                         {"converged", ps.converged},
                         {"iterations", ps.iterations},
                         {"deviance", ps.deviance},
                         {"separation", ps.separation}};
    } else {
        j["ps_model"] = nullptr;
    }
    if (r.balance) {
        json rows = json::array();
        for (const auto& b : *r.balance) {
            rows.push_back({{"covariate", b.covariate},
                            {"internal_mean", b.internal_mean},
                            {"external_mean", b.external_mean},
                            {"weighted_external_mean", b.weighted_external_mean},
                            {"raw_diff", b.raw_diff},
                            {"weighted_diff", b.weighted_diff}});
        }
        j["balance"] = rows;
    } else {
        j["balance"] = nullptr;
    }
    j["warnings"] = r.warnings;
    return j;
}

AnalysisReport report_from_json(const json& j) {
    AnalysisReport r;
    const json& m = j.at("metadata");
    r.metadata.tool_version = m.at("tool_version").get<std::string>();
    r.metadata.seed = m.at("seed").get<std::uint64_t>();
    r.metadata.boots = m.at("boots").get<int>();
    r.metadata.cap = m.at("cap").get<double>();
    r.metadata.eta = m.at("eta").get<double>();
    r.metadata.grid_points = m.at("grid_points").get<int>();
    r.metadata.level = m.at("level").get<double>();
    r.metadata.ipw = m.at("ipw").get<bool>();
    r.metadata.outcome_kind = m.at("outcome_kind").get<std::string>();
    r.metadata.binary_variance = m.at("binary_variance").get<std::string>();
    r.metadata.rules = m.at("rules").get<std::vector<std::string>>();
    r.metadata.outcome_column = m.at("outcome_column").get<std::string>();
    r.metadata.covariates = m.at("covariates").get<std::vector<std::string>>();
    for (const auto& f : m.at("inputs")) {
        r.metadata.inputs.push_back({f.at("path").get<std::string>(),
                                     f.at("fnv1a64").get<std::string>(),
                                     f.at("rows").get<std::size_t>()});
    }

    for (const auto& s : j.at("samples")) {
        r.samples.push_back({s.at("source").get<std::string>(), s.at("n").get<std::size_t>(),
                             s.at("mean").get<double>(), s.at("var_of_mean").get<double>()});
    }

    for (const auto& x : j.at("rules")) {
        RuleReport rr;
        rr.rule = x.at("rule").get<std::string>();
        rr.eta = x.at("eta").get<double>();
        rr.cap = x.at("cap").get<double>();
        rr.mu_c = draws_from(x.at("mu_c"));
        if (!x.at("tau").is_null()) rr.tau = draws_from(x.at("tau"));
        rr.point_a = x.at("point_a").get<double>();
        rr.point_a0 = get_opt<double>(x, "point_a0");
        rr.point_degenerate = x.at("point_degenerate").get<bool>();
        rr.a_mean = x.at("a_mean").get<double>();
        rr.a_sd = x.at("a_sd").get<double>();
        rr.capped_fraction = x.at("capped_fraction").get<double>();
        rr.degenerate_replicates = x.at("degenerate_replicates").get<std::size_t>();
        rr.ipw_failures = x.at("ipw_failures").get<std::size_t>();
        rr.negligible_borrowing = x.at("negligible_borrowing").get<bool>();
        r.rules.push_back(std::move(rr));
    }

    if (!j.at("ps_model").is_null()) {
        const json& ps = j.at("ps_model");
        r.ps_model = PsModelOut{ps.at("terms").get<std::vector<std::string>>(),
                                ps.at("coefficients").get<std::vector<double>>(),
                                ps.at("converged").get<bool>(),
                                ps.at("iterations").get<int>(),
                                ps.at("deviance").get<double>(),
                                ps.at("separation").get<bool>()};
    }
    if (!j.at("balance").is_null()) {
        ipw::BalanceTable table;
        for (const auto& b : j.at("balance")) {
            table.push_back({b.at("covariate").get<std::string>(),
                             b.at("internal_mean").get<double>(),
                             b.at("external_mean").get<double>(),
                             b.at("weighted_external_mean").get<double>(),
                             b.at("raw_diff").get<double>(), b.at("weighted_diff").get<double>()});
        }
        r.balance = std::move(table);
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

const std::vector<std::string>& report_csv_columns() {
    static const std::vector<std::string> cols = {
        "rule",          "eta",           "cap",
        "point",         "posterior_mean", "posterior_median",
        "posterior_sd",  "normal_lower",  "normal_upper",
        "percentile_lower", "percentile_upper", "point_a",
        "point_a0",      "a_mean",        "a_sd",
        "capped_fraction", "degenerate_replicates", "negligible_borrowing",
        "tau_point",     "tau_mean",      "tau_sd",
        "tau_percentile_lower", "tau_percentile_upper", "seed",
        "boots"};
    return cols;
}

void write_report_csv(std::ostream& os, const AnalysisReport& report) {
    write_csv_row(os, report_csv_columns());
    const double na = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : report.rules) {
        const DrawSummary* t = r.tau ? &*r.tau : nullptr;
        write_csv_row(os, {r.rule,
                           format_number(r.eta),
                           format_number(r.cap),
                           format_number(r.mu_c.point),
                           format_number(r.mu_c.mean),
                           format_number(r.mu_c.median),
                           format_number(r.mu_c.sd),
                           format_number(r.mu_c.normal_ci.lower),
                           format_number(r.mu_c.normal_ci.upper),
                           format_number(r.mu_c.percentile_ci.lower),
                           format_number(r.mu_c.percentile_ci.upper),
                           format_number(r.point_a),
                           format_number(r.point_a0.value_or(na)),
                           format_number(r.a_mean),
                           format_number(r.a_sd),
                           format_number(r.capped_fraction),
                           std::to_string(r.degenerate_replicates),
                           r.negligible_borrowing ? "1" : "0",
                           format_number(t ? t->point : na),
                           format_number(t ? t->mean : na),
                           format_number(t ? t->sd : na),
                           format_number(t ? t->percentile_ci.lower : na),
                           format_number(t ? t->percentile_ci.upper : na),
                           std::to_string(report.metadata.seed),
                           std::to_string(report.metadata.boots)});
    }
}

}  // namespace borrow::cli
