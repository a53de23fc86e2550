#pragma once

#include "ecglab/time_util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ecglab {

enum class Direction { below, above };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

// One indicator-direction class: a lab analyte paired with an abnormal side
// of its reference range, e.g. potassium < 3.5 mmol/L.
struct ThresholdEntry {
    int class_id = 0;
    std::string lab_name;
    Direction direction = Direction::below;
    double threshold = 0.0;
    std::string unit;

    // Table-style range string, e.g. "<3.5 (mmol/L)".
    std::string range_string() const;
};

struct ThresholdTable {
    std::vector<ThresholdEntry> entries; // indexed by class_id
    int n_classes() const { return static_cast<int>(entries.size()); }

    // Entry indices for one analyte (one or two directions).
    const std::vector<int>* entries_for(const std::string& lab_name) const;

    // Threshold config CSV: class_id, lab_name, direction, threshold, unit.
    static ThresholdTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::vector<int>> by_lab_;
    void rebuild_index();
};

// Raw row of the lab events CSV.
struct LabRow {
    std::string visit_id;
    TimeMicros timestamp_micros = 0;
    std::string lab_name;
    double value = 0.0;
    std::string unit;
};

// Label alphabet: -1 = not tested, 0 = tested normal, 1 = tested abnormal.
using LabelVector = std::vector<std::int8_t>;

// All lab results sharing one (visit, timestamp).
struct BloodTestEvent {
    std::string visit_id;
    TimeMicros timestamp_micros = 0;
    std::map<std::string, double> results; // lab_name -> value
    LabelVector labels;
};

// Lab events CSV: visit_id, timestamp (ISO-8601), lab_name, value, unit.
// When a table is given, rows whose unit differs from the analyte's
// threshold unit are rejected (silent unit conversion risks wrong labels).
std::vector<LabRow> load_lab_rows(const std::filesystem::path& path,
                                  const ThresholdTable* table = nullptr);

// 1 iff the value is on the abnormal side of the threshold; boundary-equal
// values are normal (strict inequalities).
int classify_value(double value, const ThresholdEntry& entry);

// One event per distinct (visit_id, timestamp); duplicate analyte within an
// event resolves last-row-wins. Events come back sorted by (visit, time).
std::vector<BloodTestEvent> group_blood_tests(const std::vector<LabRow>& rows);

LabelVector encode_labels(const BloodTestEvent& event, const ThresholdTable& table);

// Groups rows and fills each event's label vector.
std::vector<BloodTestEvent> build_events(const std::vector<LabRow>& rows,
                                         const ThresholdTable& table);

} // namespace ecglab
