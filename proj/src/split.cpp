#include "ecglab/split.hpp"

#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"
#include "ecglab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>

namespace ecglab {

SplitAssignment split_by_visit(const std::set<std::string>& visits,
                               int train_parts, int test_parts,
                               std::uint64_t seed) {
    if (visits.empty()) throw DataError("cannot split an empty visit set");
    if (train_parts <= 0 || test_parts <= 0)
        throw ConfigError("split ratio parts must be positive");

    // round(n * test / (train + test)), half away from zero, in integers
    const unsigned long long n = visits.size();
    const unsigned long long denom = static_cast<unsigned long long>(train_parts) +
                                     static_cast<unsigned long long>(test_parts);
    const unsigned long long n_test =
        (2 * n * static_cast<unsigned long long>(test_parts) + denom) / (2 * denom);

    std::vector<std::string> order(visits.begin(), visits.end());
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    SplitAssignment split;
    split.seed = seed;
    for (unsigned long long i = 0; i < n; ++i) {
        if (i < n_test) split.test_visits.insert(std::move(order[i]));
        else split.train_visits.insert(std::move(order[i]));
    }
    return split;
}

void SplitAssignment::save(const std::filesystem::path& csv_path) const {
    std::vector<std::pair<std::string, const char*>> rows;
    rows.reserve(train_visits.size() + test_visits.size());
    for (const auto& v : train_visits) rows.push_back({v, "train"});
    for (const auto& v : test_visits) rows.push_back({v, "test"});
    std::sort(rows.begin(), rows.end());

    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + csv_path.string());
    write_csv_row(out, {"visit_id", "assignment"});
    for (const auto& [visit, side] : rows) write_csv_row(out, {visit, side});

    nlohmann::json meta;
    meta["seed"] = seed;
    std::ofstream sidecar(csv_path.string() + ".meta.json",
                          std::ios::binary | std::ios::trunc);
    if (!sidecar) throw IoError("cannot create " + csv_path.string() + ".meta.json");
    sidecar << meta.dump(2) << '\n';
}

SplitAssignment SplitAssignment::load(const std::filesystem::path& csv_path) {
    SplitAssignment split;
    for (const auto& row : read_csv_with_header(csv_path, {"visit_id", "assignment"})) {
        if (row.fields.size() != 2)
            throw FormatError(csv_path.string() + ": line " +
                              std::to_string(row.line_no) + ": expected 2 columns");
        const auto& visit = row.fields[0];
        const auto& side = row.fields[1];
        if (split.train_visits.count(visit) || split.test_visits.count(visit))
            throw IntegrityError(csv_path.string() + ": visit '" + visit +
                                 "' assigned more than once");
        if (side == "train") split.train_visits.insert(visit);
        else if (side == "test") split.test_visits.insert(visit);
        else
            throw FormatError(csv_path.string() + ": line " +
                              std::to_string(row.line_no) +
                              ": assignment must be train|test, got '" + side + "'");
    }

    const auto meta_path = csv_path.string() + ".meta.json";
    std::ifstream sidecar(meta_path, std::ios::binary);
    if (!sidecar) throw IoError("cannot open " + meta_path);
    nlohmann::json meta;
    try {
        sidecar >> meta;
        split.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(meta_path + ": " + ex.what());
    }
    return split;
}

std::vector<PairedSample> pair_segments(const std::vector<BloodTestEvent>& events,
                                        const RecordingSet& recordings,
                                        const WindowSpec& win) {
    std::vector<PairedSample> pairs;
    for (std::size_t e = 0; e < events.size(); ++e) {
        const auto& ev = events[e];
        auto it = recordings.by_visit.find(ev.visit_id);
        if (it == recordings.by_visit.end()) continue;
        for (std::size_t r : it->second) {
            const auto& rec = recordings.recordings[r];
            for (std::int64_t off : tile_offsets(rec, ev.timestamp_micros, win))
                pairs.push_back({e, r, static_cast<std::size_t>(off)});
        }
    }
    return pairs;
}

std::vector<PairedSample> sample_test_segments(const std::vector<PairedSample>& pairs,
                                               const std::vector<BloodTestEvent>& events,
                                               std::size_t max_n,
                                               std::uint64_t seed) {
    std::map<std::size_t, std::vector<std::size_t>> by_event;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        by_event[pairs[i].event_index].push_back(i);

    std::vector<PairedSample> kept;
    for (const auto& [e, group] : by_event) {
        if (group.size() <= max_n) {
            for (std::size_t i : group) kept.push_back(pairs[i]);
            continue;
        }
        const auto& ev = events.at(e);
        // Per-event stream keyed by (visit, timestamp): the draw is the same
        // no matter how many other events exist or in what order they run.
        const std::uint64_t salt =
            fnv1a64(ev.visit_id) ^
            splitmix64(static_cast<std::uint64_t>(ev.timestamp_micros));
        Rng rng(derive_seed(seed, "sampling", salt));
        for (std::size_t k : rng.sample_without_replacement(group.size(), max_n))
            kept.push_back(pairs[group[k]]);
    }
    return kept;
}

} // namespace ecglab
