#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace ecglab {

// Minimal RFC-4180-style CSV support. Fields containing commas, quotes or
// newlines are quoted; lab names like "LDH, TOTAL" make this mandatory.

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line_no = 0; // 1-based, for diagnostics
};

// Reads the whole file. Throws FormatError on unbalanced quotes.
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

// Reads and validates that the first row equals `header`; returns data rows.
std::vector<CsvRow> read_csv_with_header(const std::filesystem::path& path,
                                         const std::vector<std::string>& header);

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

// Strict full-token numeric parse; throws DataError naming file and row.
double parse_double_field(const std::string& s, const std::filesystem::path& file,
                          std::size_t line_no);
long long parse_int_field(const std::string& s, const std::filesystem::path& file,
                          std::size_t line_no);

// Fixed-precision deterministic formatting helpers for report/trace output.
std::string format_double(double v, int precision);

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

} // namespace ecglab
