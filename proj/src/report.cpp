#include "ecglab/report.hpp"

#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ecglab {

std::string window_label(std::int64_t window_s) {
    if (window_s == 3600) return "1h";
    if (window_s == 1800) return "30min";
    if (window_s == 900) return "15min";
    return std::to_string(window_s) + "s";
}

std::int64_t window_from_label(const std::string& label) {
    if (label == "1h") return 3600;
    if (label == "30min") return 1800;
    if (label == "15min") return 900;
    if (!label.empty() && label.back() == 's') {
        try {
            return std::stoll(label.substr(0, label.size() - 1));
        } catch (const std::exception&) {
        }
    }
    throw FormatError("unrecognized window label '" + label + "'");
}

void sort_report_rows(std::vector<ReportRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.result.evaluable != b.result.evaluable) return a.result.evaluable;
        if (a.result.evaluable && a.result.auc != b.result.auc)
            return a.result.auc > b.result.auc;
        if (a.result.class_id != b.result.class_id)
            return a.result.class_id < b.result.class_id;
        if (a.lab_name != b.lab_name) return a.lab_name < b.lab_name;
        return a.result.window_s > b.result.window_s;
    });
}

std::vector<ReportRow> build_report(const std::vector<IndicatorResult>& results,
                                    const ThresholdTable& table) {
    std::vector<ReportRow> rows;
    rows.reserve(results.size());
    for (const auto& r : results) {
        if (r.class_id < 0 || r.class_id >= table.n_classes())
            throw DataError("result references class " + std::to_string(r.class_id) +
                            " outside the threshold table");
        const auto& entry = table.entries[r.class_id];
        rows.push_back({r, entry.lab_name, entry.range_string()});
    }
    sort_report_rows(rows);
    return rows;
}

namespace {

const std::vector<std::string> kReportHeader = {
    "lab_name", "range",       "n_all",       "n_positive",
    "auc",      "ci_low",      "ci_high",     "sensitivity",
    "specificity", "f1",       "window"};

std::vector<std::string> row_fields(const ReportRow& row) {
    const auto& r = row.result;
    auto metric = [&r](double v) {
        return r.evaluable && !std::isnan(v) ? format_double(v, 3)
                                             : std::string("NA");
    };
    return {row.lab_name,
            row.range,
            std::to_string(r.n_all),
            std::to_string(r.n_positive),
            metric(r.auc),
            metric(r.ci_low),
            metric(r.ci_high),
            metric(r.sensitivity),
            metric(r.specificity),
            metric(r.f1),
            window_label(r.window_s)};
}

} // namespace

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ReportRow>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    write_csv_row(out, kReportHeader);
    for (const auto& row : rows) write_csv_row(out, row_fields(row));
    if (!out) throw IoError("short write to " + path.string());
}

void write_report_markdown(const std::filesystem::path& path,
                           const std::vector<ReportRow>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    auto line = [&out](const std::vector<std::string>& fields) {
        out << '|';
        for (const auto& f : fields) out << ' ' << f << " |";
        out << '\n';
    };
    line(kReportHeader);
    std::vector<std::string> rule(kReportHeader.size(), "---");
    line(rule);
    for (const auto& row : rows) line(row_fields(row));
    if (!out) throw IoError("short write to " + path.string());
}

std::vector<ReportRow> load_report_csv(const std::filesystem::path& path) {
    std::vector<ReportRow> rows;
    for (const auto& raw : read_csv_with_header(path, kReportHeader)) {
        if (raw.fields.size() != kReportHeader.size())
            throw FormatError(path.string() + ": line " +
                              std::to_string(raw.line_no) + ": expected " +
                              std::to_string(kReportHeader.size()) + " columns");
        ReportRow row;
        row.lab_name = raw.fields[0];
        row.range = raw.fields[1];
        auto& r = row.result;
        r.class_id = -1; // reports do not store class ids
        r.n_all = static_cast<std::size_t>(
            parse_int_field(raw.fields[2], path, raw.line_no));
        r.n_positive = static_cast<std::size_t>(
            parse_int_field(raw.fields[3], path, raw.line_no));
        auto metric = [&](std::size_t col) {
            return raw.fields[col] == "NA"
                       ? std::numeric_limits<double>::quiet_NaN()
                       : parse_double_field(raw.fields[col], path, raw.line_no);
        };
        r.evaluable = raw.fields[4] != "NA";
        if (r.evaluable) {
            r.auc = parse_double_field(raw.fields[4], path, raw.line_no);
            r.ci_low = metric(5);
            r.ci_high = metric(6);
            r.sensitivity = metric(7);
            r.specificity = metric(8);
            r.f1 = metric(9);
        }
        r.window_s = window_from_label(raw.fields[10]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_stratified_summary(const std::vector<ReportRow>& rows) {
    std::vector<const ReportRow*> strong, moderate, weak, skipped;
    for (const auto& row : rows) {
        if (!row.result.evaluable) skipped.push_back(&row);
        else if (row.result.auc >= 0.65) strong.push_back(&row);
        else if (row.result.auc >= 0.55) moderate.push_back(&row);
        else weak.push_back(&row);
    }
    std::ostringstream os;
    auto bucket = [&os](const char* title, const std::vector<const ReportRow*>& rs,
                        bool with_auc) {
        os << title << ": " << rs.size() << "\n";
        for (const auto* row : rs) {
            os << "  " << row->lab_name << " " << row->range;
            if (with_auc)
                os << "  auc " << format_double(row->result.auc, 3) << " ["
                   << format_double(row->result.ci_low, 3) << "-"
                   << format_double(row->result.ci_high, 3) << "] ("
                   << window_label(row->result.window_s) << ")";
            os << "\n";
        }
    };
    bucket("strong (auc >= 0.65)", strong, true);
    bucket("moderate (0.55 <= auc < 0.65)", moderate, true);
    bucket("weak (auc < 0.55)", weak, true);
    if (!skipped.empty()) bucket("not evaluable", skipped, false);
    return os.str();
}

} // namespace ecglab
