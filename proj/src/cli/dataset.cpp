#include "borrow/cli/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "borrow/cli/csv.hpp"

namespace borrow::cli {

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(2, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct RawFile {
    CsvTable table;
    InputFingerprint fingerprint;
};

RawFile load_table(const std::string& path) {
    const std::string text = read_file(path);
    RawFile f;
    try {
        f.table = parse_csv(text);
    } catch (const std::runtime_error& e) {
        throw CliError(2, path + ": " + e.what());
    }
    f.fingerprint = {path, fnv1a64_hex(text), f.table.rows.size()};
    return f;
}

std::size_t require_column(const CsvTable& t, const std::string& name, const std::string& path) {
    const int idx = t.column(name);
    if (idx < 0) throw CliError(2, path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(idx);
}

double parse_value(const std::string& s, const std::string& column, std::size_t row,
                   const std::string& path) {
    std::string_view v(s);
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
    if (v.empty() || v == "NA" || v == "NaN" || v == "nan") {
        throw CliError(2, path + ": missing value in column '" + column + "' at data row " +
                              std::to_string(row + 1));
    }
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw CliError(2, path + ": non-numeric value '" + s + "' in column '" + column +
                              "' at data row " + std::to_string(row + 1));
    }
    return out;
}

struct Columns {
    std::vector<double> y;
    std::vector<double> x;  // row-major
};

Columns extract(const CsvTable& t, const std::vector<std::size_t>& rows, const DatasetSpec& spec,
                const std::string& path, bool with_covariates) {
    const std::size_t yi = require_column(t, spec.outcome, path);
    std::vector<std::size_t> xi;
    if (with_covariates) {
        for (const auto& c : spec.covariates) xi.push_back(require_column(t, c, path));
    }
    Columns out;
    for (std::size_t r : rows) {
        out.y.push_back(parse_value(t.rows[r][yi], spec.outcome, r, path));
        for (std::size_t j = 0; j < xi.size(); ++j) {
            out.x.push_back(parse_value(t.rows[r][xi[j]], spec.covariates[j], r, path));
        }
    }
    return out;
}

std::vector<std::size_t> all_rows(const CsvTable& t) {
    std::vector<std::size_t> r(t.rows.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
}

bool zero_one(const std::vector<double>& y) {
    for (double v : y) {
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

ControlSample make_sample(Columns&& c, OutcomeKind kind, SourceLabel label, std::size_t p,
                          const std::string& what) {
    if (c.y.size() < 2) {
        throw CliError(3, what + " has " + std::to_string(c.y.size()) +
                              " rows; at least two are required");
    }
    std::optional<Covariates> x;
    if (p > 0) x = Covariates(c.y.size(), p, std::move(c.x));
    try {
        return ControlSample(std::move(c.y), kind, label, std::move(x));
    } catch (const Error& e) {
        throw CliError(e.code() == ErrorCode::DegenerateSample ? 3 : 2, what + ": " + e.what());
    }
}

}  // namespace

LoadedData load_dataset(const DatasetSpec& spec) {
    if (spec.outcome.empty()) throw CliError(2, "--outcome is required");

    std::vector<Columns> parts;  // internal, external, [treated]
    std::vector<std::string> names;
    std::vector<InputFingerprint> fps;
    bool have_treated = false;

    if (spec.data_path) {
        if (spec.internal_path || spec.external_path || spec.treated_path) {
            throw CliError(2, "use either --data with an arm column or --internal/--external files");
        }
        if (spec.arm_column.empty()) throw CliError(2, "--data requires --arm-column");
        RawFile f = load_table(*spec.data_path);
        const std::size_t arm = require_column(f.table, spec.arm_column, *spec.data_path);
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t r = 0; r < f.table.rows.size(); ++r) {
            groups[f.table.rows[r][arm]].push_back(r);
        }
        std::vector<std::string> values = {spec.internal_value, spec.external_value};
        if (spec.treated_value) values.push_back(*spec.treated_value);
        for (std::size_t k = 0; k < values.size(); ++k) {
            parts.push_back(extract(f.table, groups[values[k]], spec, *spec.data_path, k < 2));
            names.push_back(spec.arm_column + "=" + values[k]);
        }
        have_treated = spec.treated_value.has_value();
        fps.push_back(f.fingerprint);
    } else {
        if (!spec.internal_path || !spec.external_path) {
            throw CliError(2, "--internal and --external are required (or --data with --arm-column)");
        }
        std::vector<std::string> paths = {*spec.internal_path, *spec.external_path};
        if (spec.treated_path) paths.push_back(*spec.treated_path);
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const std::string& path = paths[k];
            RawFile f = load_table(path);
            parts.push_back(extract(f.table, all_rows(f.table), spec, path, k < 2));
            names.push_back(path);
            fps.push_back(f.fingerprint);
        }
        have_treated = spec.treated_path.has_value();
    }

    OutcomeKind kind = OutcomeKind::Continuous;
    const bool all01 = zero_one(parts[0].y) && zero_one(parts[1].y);
    switch (spec.kind) {
        case OutcomeKindChoice::Auto: kind = all01 ? OutcomeKind::Binary : OutcomeKind::Continuous; break;
        case OutcomeKindChoice::Continuous: kind = OutcomeKind::Continuous; break;
        case OutcomeKindChoice::Binary:
            if (!all01) throw CliError(2, "binary outcome column contains values other than 0/1");
            kind = OutcomeKind::Binary;
            break;
    }
    const std::size_t p = spec.covariates.size();
    LoadedData data{
        make_sample(std::move(parts[0]), kind, SourceLabel::Internal, p, "internal sample " + names[0]),
        make_sample(std::move(parts[1]), kind, SourceLabel::External, p, "external sample " + names[1]),
        std::nullopt, kind, std::move(fps)};
    if (have_treated) {
        // Covariates only enter the propensity model, which excludes the treated arm.
        data.treated = make_sample(std::move(parts[2]), kind, SourceLabel::Treated, 0,
                                   "treated sample " + names[2]);
    }
    return data;
}

}  // namespace borrow::cli
