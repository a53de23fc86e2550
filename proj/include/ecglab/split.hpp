#pragma once

#include "ecglab/labels.hpp"
#include "ecglab/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace ecglab {

// Visit-level train/test partition. Splitting on visits rather than samples
// keeps every segment of one visit on one side of the fence.
struct SplitAssignment {
    std::set<std::string> train_visits;
    std::set<std::string> test_visits;
    std::uint64_t seed = 0;

    bool is_test(const std::string& visit_id) const {
        return test_visits.count(visit_id) != 0;
    }

    // Split manifest CSV: visit_id, assignment (train|test). The seed is
    // recorded in a JSON sidecar next to the CSV.
    void save(const std::filesystem::path& csv_path) const;
    static SplitAssignment load(const std::filesystem::path& csv_path);
};

// One (segment, event) training or evaluation sample. Stored by reference —
// indices into the caller's event list and recording set plus a sample
// offset — so a large cohort never holds two copies of its waveforms.
struct PairedSample {
    std::size_t event_index = 0;     // into the caller's event list
    std::size_t recording_index = 0; // into RecordingSet::recordings
    std::size_t offset = 0;          // first raw sample of the segment
};

// |test| = round(|visits| * test_parts / (train_parts + test_parts)),
// uniform over visits, deterministic for a given seed.
SplitAssignment split_by_visit(const std::set<std::string>& visits,
                               int train_parts, int test_parts,
                               std::uint64_t seed);

// Cross product of each event with the window-clipped segments of every
// recording belonging to the same visit. Events yielding no segments simply
// contribute no pairs.
std::vector<PairedSample> pair_segments(const std::vector<BloodTestEvent>& events,
                                        const RecordingSet& recordings,
                                        const WindowSpec& win);

// Per-event cap for evaluation: keep everything up to max_n, otherwise an
// exact-size uniform sample without replacement. Selection for each event is
// drawn from a stream derived from (seed, visit, timestamp), so the outcome
// does not depend on processing order.
std::vector<PairedSample> sample_test_segments(const std::vector<PairedSample>& pairs,
                                               const std::vector<BloodTestEvent>& events,
                                               std::size_t max_n,
                                               std::uint64_t seed);

} // namespace ecglab
