#pragma once
// Minimal RFC 4180 CSV reading and writing.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace borrow::cli {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name` in the header, or -1.
    int column(std::string_view name) const;
};

/// Parses CSV text: quoted fields may contain commas, doubled quotes and
/// line breaks; LF and CRLF record separators are both accepted. The first
/// record is the header. Throws std::runtime_error on malformed input or
/// rows whose width differs from the header.
CsvTable parse_csv(std::string_view text);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Writes one record terminated by CRLF.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

/// Shortest round-trip decimal form; "NA" for NaN.
std::string format_number(double value);

}  // namespace borrow::cli
