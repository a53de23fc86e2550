#include "ecglab/labels.hpp"

#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ecglab {

std::string to_string(Direction d) {
    return d == Direction::below ? "below" : "above";
}

Direction direction_from_string(const std::string& s) {
    if (s == "below") return Direction::below;
    if (s == "above") return Direction::above;
    throw ConfigError("unknown direction '" + s + "' (expected below|above)");
}

std::string ThresholdEntry::range_string() const {
    std::ostringstream os;
    os << (direction == Direction::below ? "<" : ">") << threshold
       << " (" << unit << ")";
    return os.str();
}

const std::vector<int>* ThresholdTable::entries_for(const std::string& lab_name) const {
    auto it = by_lab_.find(lab_name);
    return it == by_lab_.end() ? nullptr : &it->second;
}

void ThresholdTable::rebuild_index() {
    by_lab_.clear();
    for (int i = 0; i < n_classes(); ++i)
        by_lab_[entries[i].lab_name].push_back(i);
}

ThresholdTable ThresholdTable::load(const std::filesystem::path& path) {
    auto rows = read_csv_with_header(
        path, {"class_id", "lab_name", "direction", "threshold", "unit"});
    if (rows.empty())
        throw ConfigError("threshold table " + path.string() + " has no entries");

    ThresholdTable table;
    table.entries.resize(rows.size());
    std::vector<bool> seen_id(rows.size(), false);
    std::set<std::pair<std::string, std::string>> seen_pair;
    for (const auto& row : rows) {
        ThresholdEntry e;
        e.class_id = static_cast<int>(parse_int_field(row.fields[0], path, row.line_no));
        e.lab_name = row.fields[1];
        try {
            e.direction = direction_from_string(row.fields[2]);
        } catch (const ConfigError& ex) {
            throw ConfigError(path.string() + ":" + std::to_string(row.line_no) +
                              ": " + ex.what());
        }
        e.threshold = parse_double_field(row.fields[3], path, row.line_no);
        if (!std::isfinite(e.threshold))
            throw ConfigError(path.string() + ":" + std::to_string(row.line_no) +
                              ": threshold must be finite");
        e.unit = row.fields[4];

        if (e.class_id < 0 || e.class_id >= static_cast<int>(rows.size()))
            throw ConfigError(path.string() + ":" + std::to_string(row.line_no) +
                              ": class_id " + std::to_string(e.class_id) +
                              " outside [0, " + std::to_string(rows.size()) + ")");
        if (seen_id[e.class_id])
            throw ConfigError(path.string() + ":" + std::to_string(row.line_no) +
                              ": duplicate class_id " + std::to_string(e.class_id));
        seen_id[e.class_id] = true;
        if (!seen_pair.insert({e.lab_name, row.fields[2]}).second)
            throw ConfigError(path.string() + ":" + std::to_string(row.line_no) +
                              ": duplicate (" + e.lab_name + ", " + row.fields[2] + ")");
        table.entries[e.class_id] = e;
    }
    table.rebuild_index();
    return table;
}

void ThresholdTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv_row(out, {"class_id", "lab_name", "direction", "threshold", "unit"});
    for (const auto& e : entries)
        write_csv_row(out, {std::to_string(e.class_id), e.lab_name,
                            to_string(e.direction), format_double(e.threshold),
                            e.unit});
}

std::vector<LabRow> load_lab_rows(const std::filesystem::path& path,
                                  const ThresholdTable* table) {
    auto rows = read_csv_with_header(
        path, {"visit_id", "timestamp", "lab_name", "value", "unit"});
    std::vector<LabRow> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        LabRow r;
        r.visit_id = row.fields[0];
        try {
            r.timestamp_micros = parse_iso8601_micros(row.fields[1]);
        } catch (const FormatError& ex) {
            throw FormatError(path.string() + ":" + std::to_string(row.line_no) +
                              ": " + ex.what());
        } catch (const DataError& ex) {
            throw DataError(path.string() + ":" + std::to_string(row.line_no) +
                            ": " + ex.what());
        }
        r.lab_name = row.fields[2];
        r.value = parse_double_field(row.fields[3], path, row.line_no);
        r.unit = row.fields[4];
        if (table) {
            if (const auto* idx = table->entries_for(r.lab_name)) {
                const auto& want = table->entries[idx->front()].unit;
                if (r.unit != want)
                    throw DataError(path.string() + ":" + std::to_string(row.line_no) +
                                    ": " + r.lab_name + " reported in '" + r.unit +
                                    "' but thresholds use '" + want + "'");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

int classify_value(double value, const ThresholdEntry& entry) {
    if (!std::isfinite(value))
        throw DataError("non-finite value for " + entry.lab_name);
    if (entry.direction == Direction::below) return value < entry.threshold ? 1 : 0;
    return value > entry.threshold ? 1 : 0;
}

std::vector<BloodTestEvent> group_blood_tests(const std::vector<LabRow>& rows) {
    std::map<std::pair<std::string, TimeMicros>, BloodTestEvent> by_key;
    for (const auto& r : rows) {
        auto& ev = by_key[{r.visit_id, r.timestamp_micros}];
        ev.visit_id = r.visit_id;
        ev.timestamp_micros = r.timestamp_micros;
        ev.results[r.lab_name] = r.value; // later row overwrites earlier
    }
    std::vector<BloodTestEvent> out;
    out.reserve(by_key.size());
    for (auto& [key, ev] : by_key) out.push_back(std::move(ev));
    return out;
}

LabelVector encode_labels(const BloodTestEvent& event, const ThresholdTable& table) {
    LabelVector labels(table.n_classes(), -1);
    for (const auto& [lab, value] : event.results) {
        const auto* idx = table.entries_for(lab);
        if (!idx) continue; // analyte outside the target panel
        for (int j : *idx)
            labels[j] = static_cast<std::int8_t>(classify_value(value, table.entries[j]));
    }
    return labels;
}

std::vector<BloodTestEvent> build_events(const std::vector<LabRow>& rows,
                                         const ThresholdTable& table) {
    auto events = group_blood_tests(rows);
    for (auto& ev : events) ev.labels = encode_labels(ev, table);
    return events;
}

} // namespace ecglab
