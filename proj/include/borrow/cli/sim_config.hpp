#pragma once
// Simulation config files (JSON) and the metrics CSV written by
// `borrow simulate`.
//
// Config schema:
//   {
//     "seed": 12345,                 // optional base seed
//     "defaults": { ...scenario },   // optional, merged under each scenario
//     "scenarios": [ { ...scenario }, ... ]
//   }
// Scenario fields: id, outcome ("normal" | "binary" | "t"), df, p, beta,
// n0, n1_multiplier, delta (number or list; a list expands to one scenario
// per value), p0, cap, rules (names or {"rule", "eta", "grid_points"}
// objects), nsim, nboot, seed, level, binary_variance ("plugin" | "beta" |
// "sample"). Unknown fields are rejected.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrow/sim.hpp"

namespace borrow::cli {

/// Decodes a config document. `base_seed` (the --seed flag) takes
/// precedence over the document's top-level seed; scenario-level seeds
/// take precedence over both. Throws CliError(2) listing every offending
/// field.
std::vector<sim::ScenarioConfig> parse_sim_config(const nlohmann::json& doc,
                                                  std::optional<std::uint64_t> base_seed,
                                                  std::uint64_t fallback_seed);

/// Top-level seed of the document, if any.
std::optional<std::uint64_t> config_seed(const nlohmann::json& doc);

const std::vector<std::string>& metrics_csv_columns();
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const sim::MetricsRow& row);

}  // namespace borrow::cli
