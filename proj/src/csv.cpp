#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ecglab {

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());

    std::vector<CsvRow> rows;
    CsvRow row;
    row.line_no = 1;
    std::string field;
    std::size_t line = 1;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&]() {
        row.fields.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(std::move(row));
        row = CsvRow{};
        row.line_no = line;
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            row_has_content = true;
            break;
        case '\r':
            break;
        case '\n':
            ++line;
            if (row_has_content || !field.empty() || !row.fields.empty()) end_row();
            else row.line_no = line;
            break;
        default:
            field.push_back(c);
            row_has_content = true;
            break;
        }
    }
    if (in_quotes)
        throw FormatError(path.string() + ": unterminated quoted field at line " +
                          std::to_string(row.line_no));
    if (row_has_content || !field.empty() || !row.fields.empty()) end_row();
    return rows;
}

std::vector<CsvRow> read_csv_with_header(const std::filesystem::path& path,
                                         const std::vector<std::string>& header) {
    auto rows = read_csv(path);
    if (rows.empty())
        throw FormatError(path.string() + ": empty file, expected header row");
    const auto& h = rows.front().fields;
    bool ok = h.size() == header.size();
    for (std::size_t i = 0; ok && i < h.size(); ++i) ok = h[i] == header[i];
    if (!ok) {
        std::ostringstream want;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) want << ",";
            want << header[i];
        }
        throw FormatError(path.string() + ": bad header row (line 1), expected: " +
                          want.str());
    }
    rows.erase(rows.begin());
    return rows;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(fields[i]);
    }
    os << '\n';
}

double parse_double_field(const std::string& s, const std::filesystem::path& file,
                          std::size_t line_no) {
    if (s.empty())
        throw DataError(file.string() + ": line " + std::to_string(line_no) +
                        ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw DataError(file.string() + ": line " + std::to_string(line_no) +
                        ": not a number: '" + s + "'");
    return v;
}

long long parse_int_field(const std::string& s, const std::filesystem::path& file,
                          std::size_t line_no) {
    if (s.empty())
        throw DataError(file.string() + ": line " + std::to_string(line_no) +
                        ": empty integer field");
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw DataError(file.string() + ": line " + std::to_string(line_no) +
                        ": not an integer: '" + s + "'");
    return v;
}

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return std::string(buf, end);
}

} // namespace ecglab
