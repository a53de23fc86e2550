#pragma once

#include "ecglab/labels.hpp"
#include "ecglab/metrics.hpp"
#include "ecglab/nn.hpp"
#include "ecglab/split.hpp"
#include "ecglab/train.hpp"
#include "ecglab/waveform.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace ecglab {

// Events belonging to the given visit set, original order preserved.
std::vector<BloodTestEvent> filter_events_by_visits(
    const std::vector<BloodTestEvent>& events,
    const std::set<std::string>& visits);

// One window's evaluation. AUCs are computed at two granularities: event
// level (segment probabilities averaged per event — the primary view) and
// segment level (every segment scored against its event's label).
struct WindowEvaluation {
    std::vector<IndicatorResult> event_level;
    std::vector<IndicatorResult> segment_level;
    std::size_t n_events = 0;   // events that contributed at least 1 segment
    std::size_t n_segments = 0; // after the per-event cap
};

// Pairs each event with its windowed segments, caps segments per event,
// scores them with the network, aggregates, and evaluates every class.
WindowEvaluation evaluate_window(const Network& net,
                                 const std::vector<BloodTestEvent>& events,
                                 const RecordingSet& recordings,
                                 const WindowSpec& win,
                                 std::size_t max_test_segments,
                                 std::uint64_t sampling_seed,
                                 const EvalConfig& ecfg,
                                 std::size_t batch_size = 256);

} // namespace ecglab
