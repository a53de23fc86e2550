#pragma once

#include "ecglab/labels.hpp"
#include "ecglab/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ecglab {

// One output row: an indicator's evaluation joined with its analyte name
// and range string from the threshold table.
struct ReportRow {
    IndicatorResult result;
    std::string lab_name;
    std::string range;
};

// "1h", "30min", "15min" for the canonical windows; "<seconds>s" otherwise.
std::string window_label(std::int64_t window_s);
std::int64_t window_from_label(const std::string& label);

// Evaluable rows by AUC descending (ties by class id), then not-evaluable
// rows by class id.
void sort_report_rows(std::vector<ReportRow>& rows);

// Joins results with the table and sorts.
std::vector<ReportRow> build_report(const std::vector<IndicatorResult>& results,
                                    const ThresholdTable& table);

// Columns: lab_name, range, n_all, n_positive, auc, ci_low, ci_high,
// sensitivity, specificity, f1, window. Not-evaluable rows carry NA in the
// metric columns.
void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ReportRow>& rows);
void write_report_markdown(const std::filesystem::path& path,
                           const std::vector<ReportRow>& rows);

// Reads a written report back. Metric precision is whatever the CSV holds
// (3 decimals); class ids are not stored in reports and come back as -1.
std::vector<ReportRow> load_report_csv(const std::filesystem::path& path);

// Bucket counts plus each bucket's members, as display text.
std::string render_stratified_summary(const std::vector<ReportRow>& rows);

} // namespace ecglab
