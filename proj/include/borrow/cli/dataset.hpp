#pragma once
// Loading internal, external and treated samples from CSV files.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "borrow/core.hpp"

namespace borrow::cli {

/// Error carrying the process exit code it maps to (2: bad input, 3:
/// degenerate data).
class CliError : public std::runtime_error {
public:
    CliError(int exit_code, const std::string& what)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

enum class OutcomeKindChoice { Auto, Continuous, Binary };

/// Either three separate files (internal/external/treated paths) or one
/// file split by an arm column.
struct DatasetSpec {
    std::optional<std::string> internal_path;
    std::optional<std::string> external_path;
    std::optional<std::string> treated_path;

    std::optional<std::string> data_path;
    std::string arm_column;
    std::string internal_value;
    std::string external_value;
    std::optional<std::string> treated_value;

    std::string outcome;
    std::vector<std::string> covariates;
    OutcomeKindChoice kind = OutcomeKindChoice::Auto;
};

struct InputFingerprint {
    std::string path;
    std::string fnv1a64;  // hex digest of the file bytes
    std::size_t rows = 0;

    friend bool operator==(const InputFingerprint&, const InputFingerprint&) = default;
};

struct LoadedData {
    ControlSample internal;
    ControlSample external;
    std::optional<ControlSample> treated;
    OutcomeKind kind = OutcomeKind::Continuous;
    std::vector<InputFingerprint> fingerprints;
};

std::string fnv1a64_hex(std::string_view bytes);

/// Reads and validates the samples. Missing columns, missing or
/// non-numeric values and non-{0,1} binary outcomes raise CliError(2);
/// sources with fewer than two rows raise CliError(3).
LoadedData load_dataset(const DatasetSpec& spec);

}  // namespace borrow::cli
