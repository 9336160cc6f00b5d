#include "borrow/cli/sim_config.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>

#include "borrow/cli/csv.hpp"
#include "borrow/cli/dataset.hpp"

namespace borrow::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kScenarioFields = {
    "id",   "outcome", "df",    "p",     "beta",  "n0",    "n1_multiplier", "delta",
    "p0",   "cap",     "rules", "nsim",  "nboot", "seed",  "level",         "binary_variance"};

class Collector {
public:
    void add(const std::string& where, const std::string& msg) { msgs_.push_back(where + ": " + msg); }
    bool empty() const { return msgs_.empty(); }
    [[noreturn]] void raise() const {
        std::ostringstream os;
        os << "invalid simulation config";
        for (const auto& m : msgs_) os << "\n  " << m;
        throw CliError(2, os.str());
    }

private:
    std::vector<std::string> msgs_;
};

template <class T>
void read_field(const json& obj, const char* key, T& out, const std::string& where,
                Collector& errors) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        errors.add(where + "." + key, "wrong type");
    }
}

std::vector<BorrowingRule> read_rules(const json& v, const std::string& where, Collector& errors) {
    std::vector<BorrowingRule> rules;
    if (!v.is_array()) {
        errors.add(where + ".rules", "must be a list");
        return rules;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = where + ".rules[" + std::to_string(i) + "]";
        BorrowingRule rule;
        try {
            if (v[i].is_string()) {
                rule.kind = rule_kind_from_string(v[i].get<std::string>());
            } else if (v[i].is_object()) {
                for (const auto& [k, _] : v[i].items()) {
                    if (k != "rule" && k != "eta" && k != "grid_points") {
                        errors.add(at + "." + k, "unknown field");
                    }
                }
                rule.kind = rule_kind_from_string(v[i].at("rule").get<std::string>());
                read_field(v[i], "eta", rule.eta, at, errors);
                read_field(v[i], "grid_points", rule.grid_points, at, errors);
            } else {
                errors.add(at, "must be a rule name or object");
                continue;
            }
        } catch (const Error& e) {
            errors.add(at, e.what());
            continue;
        } catch (const json::exception&) {
            errors.add(at, "missing or invalid 'rule'");
            continue;
        }
        rules.push_back(rule);
    }
    return rules;
}

}  // namespace

std::optional<std::uint64_t> config_seed(const json& doc) {
    if (doc.is_object() && doc.contains("seed") && doc.at("seed").is_number_integer()) {
        return doc.at("seed").get<std::uint64_t>();
    }
    return std::nullopt;
}

std::vector<sim::ScenarioConfig> parse_sim_config(const json& doc,
                                                  std::optional<std::uint64_t> base_seed,
                                                  std::uint64_t fallback_seed) {
    Collector errors;
    if (!doc.is_object()) {
        errors.add("config", "must be a JSON object");
        errors.raise();
    }
    for (const auto& [k, _] : doc.items()) {
        if (k != "seed" && k != "defaults" && k != "scenarios") errors.add(k, "unknown field");
    }
    if (doc.contains("seed") && !doc.at("seed").is_number_unsigned()) {
        errors.add("seed", "must be a nonnegative integer");
    }
    const std::uint64_t seed = base_seed.value_or(config_seed(doc).value_or(fallback_seed));

    json defaults = json::object();
    if (doc.contains("defaults")) {
        if (!doc.at("defaults").is_object()) {
            errors.add("defaults", "must be an object");
        } else {
            defaults = doc.at("defaults");
        }
    }
    if (!doc.contains("scenarios") || !doc.at("scenarios").is_array()) {
        errors.add("scenarios", "a list of scenarios is required");
        errors.raise();
    }
    const json& list = doc.at("scenarios");
    if (list.empty()) {
        errors.add("scenarios", "list is empty");
        errors.raise();
    }

    std::vector<sim::ScenarioConfig> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "scenarios[" + std::to_string(i) + "]";
        if (!list[i].is_object()) {
            errors.add(where, "must be an object");
            continue;
        }
        json s = defaults;
        s.update(list[i]);
        for (const auto& [k, _] : s.items()) {
            if (!kScenarioFields.contains(k)) errors.add(where + "." + k, "unknown field");
        }

        sim::ScenarioConfig cfg;
        cfg.seed = seed;
        read_field(s, "id", cfg.id, where, errors);
        if (cfg.id.empty()) cfg.id = "s" + std::to_string(i + 1);
        if (s.contains("outcome")) {
            try {
                cfg.outcome = sim::outcome_family_from_string(s.at("outcome").get<std::string>());
            } catch (const std::exception&) {
                errors.add(where + ".outcome", "must be \"normal\", \"binary\" or \"t\"");
            }
        }
        read_field(s, "df", cfg.df, where, errors);
        read_field(s, "p", cfg.p, where, errors);
        if (s.contains("beta")) {
            double b = 0.0;
            read_field(s, "beta", b, where, errors);
            cfg.beta = b;
        }
        read_field(s, "n0", cfg.n0, where, errors);
        read_field(s, "n1_multiplier", cfg.n1_multiplier, where, errors);
        read_field(s, "p0", cfg.p0, where, errors);
        read_field(s, "cap", cfg.cap, where, errors);
        read_field(s, "nsim", cfg.nsim, where, errors);
        read_field(s, "nboot", cfg.nboot, where, errors);
        read_field(s, "seed", cfg.seed, where, errors);
        read_field(s, "level", cfg.level, where, errors);
        if (s.contains("binary_variance")) {
            try {
                cfg.binary_variance =
                    binary_variance_from_string(s.at("binary_variance").get<std::string>());
            } catch (const std::exception&) {
                errors.add(where + ".binary_variance", "must be \"plugin\", \"beta\" or \"sample\"");
            }
        }
        if (s.contains("rules")) {
            cfg.rules = read_rules(s.at("rules"), where, errors);
        } else {
            cfg.rules = {BorrowingRule{RuleKind::MaxML}, BorrowingRule{RuleKind::MinMSE}};
        }

        std::vector<double> deltas = {0.0};
        if (s.contains("delta")) {
            const json& d = s.at("delta");
            if (d.is_number()) {
                deltas = {d.get<double>()};
            } else if (d.is_array() && !d.empty() &&
                       std::all_of(d.begin(), d.end(), [](const json& x) { return x.is_number(); })) {
                deltas = d.get<std::vector<double>>();
            } else {
                errors.add(where + ".delta", "must be a number or a nonempty list of numbers");
            }
        }

        for (double delta : deltas) {
            sim::ScenarioConfig c = cfg;
            c.delta = delta;
            for (const auto& p : c.problems()) errors.add(where, p);
            out.push_back(std::move(c));
        }
    }
    if (!errors.empty()) errors.raise();
    return out;
}

const std::vector<std::string>& metrics_csv_columns() {
    static const std::vector<std::string> cols = {
        "scenario_id", "outcome", "df", "p", "beta", "n0", "n1", "delta", "p0", "cap",
        "nsim", "nboot", "seed", "rule", "eta", "truth", "truth_source", "mean_estimate",
        "bias", "variance", "se_variance", "mse", "se_mse", "mean_a", "capped_fraction",
        "coverage_normal", "se_coverage_normal", "coverage_percentile",
        "se_coverage_percentile", "nob_variance", "nob_mse", "nob_benchmark", "failures",
        "degenerate"};
    return cols;
}

void write_metrics_header(std::ostream& os) { write_csv_row(os, metrics_csv_columns()); }

void write_metrics_row(std::ostream& os, const sim::MetricsRow& r) {
    write_csv_row(os, {r.scenario_id,
                       r.outcome,
                       format_number(r.df),
                       std::to_string(r.p),
                       format_number(r.beta),
                       std::to_string(r.n0),
                       std::to_string(r.n1),
                       format_number(r.delta),
                       format_number(r.p0),
                       format_number(r.cap),
                       std::to_string(r.nsim),
                       std::to_string(r.nboot),
                       std::to_string(r.seed),
                       r.rule,
                       format_number(r.eta),
                       format_number(r.truth),
                       r.truth_source,
                       format_number(r.mean_estimate),
                       format_number(r.bias),
                       format_number(r.variance),
                       format_number(r.se_variance),
                       format_number(r.mse),
                       format_number(r.se_mse),
                       format_number(r.mean_a),
                       format_number(r.capped_fraction),
                       format_number(r.coverage_normal),
                       format_number(r.se_coverage_normal),
                       format_number(r.coverage_percentile),
                       format_number(r.se_coverage_percentile),
                       format_number(r.nob_variance),
                       format_number(r.nob_mse),
                       format_number(r.nob_benchmark),
                       std::to_string(r.failures),
                       std::to_string(r.degenerate)});
}

}  // namespace borrow::cli
