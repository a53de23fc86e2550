#include "ecglab/pipeline.hpp"

#include "ecglab/errors.hpp"
#include "ecglab/rng.hpp"

#include <algorithm>
#include <map>

namespace ecglab {

std::vector<BloodTestEvent> filter_events_by_visits(
    const std::vector<BloodTestEvent>& events,
    const std::set<std::string>& visits) {
    std::vector<BloodTestEvent> out;
    for (const auto& ev : events)
        if (visits.count(ev.visit_id)) out.push_back(ev);
    return out;
}

WindowEvaluation evaluate_window(const Network& net,
                                 const std::vector<BloodTestEvent>& events,
                                 const RecordingSet& recordings,
                                 const WindowSpec& win,
                                 std::size_t max_test_segments,
                                 std::uint64_t sampling_seed,
                                 const EvalConfig& ecfg,
                                 std::size_t batch_size) {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    const std::size_t C = net.config().n_classes;
    const std::size_t L = net.config().input_length;

    auto pairs = pair_segments(events, recordings, win);
    pairs = sample_test_segments(pairs, events, max_test_segments, sampling_seed);

    WindowEvaluation we;
    we.n_segments = pairs.size();

    // Score all retained segments, batch by batch.
    std::vector<std::vector<double>> segment_probs(pairs.size());
    std::vector<float> batch;
    for (std::size_t first = 0; first < pairs.size(); first += batch_size) {
        const std::size_t count = std::min(batch_size, pairs.size() - first);
        fill_batch(recordings, pairs, first, count, L, batch);
        Matrix probs = predict(net, batch, count);
        for (std::size_t s = 0; s < count; ++s)
            segment_probs[first + s] =
                std::vector<double>(probs.v.begin() + s * C,
                                    probs.v.begin() + (s + 1) * C);
    }

    std::map<std::size_t, std::vector<std::size_t>> by_event;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        by_event[pairs[i].event_index].push_back(i);
    we.n_events = by_event.size();

    std::vector<std::vector<double>> event_scores;
    std::vector<const LabelVector*> event_labels;
    event_scores.reserve(by_event.size());
    for (const auto& [e, seg_idx] : by_event) {
        std::vector<std::vector<double>> probs;
        probs.reserve(seg_idx.size());
        for (std::size_t i : seg_idx) probs.push_back(segment_probs[i]);
        event_scores.push_back(aggregate_event_scores(probs));
        event_labels.push_back(&events.at(e).labels);
    }

    // Segment-level CIs draw from their own stream so the two granularities
    // never share bootstrap randomness.
    EvalConfig seg_cfg = ecfg;
    seg_cfg.boot_seed = derive_seed(ecfg.boot_seed, "segment-level");

    for (std::size_t j = 0; j < C; ++j) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t k = 0; k < event_scores.size(); ++k) {
            const std::int8_t l = (*event_labels[k]).at(j);
            if (l == -1) continue;
            scores.push_back(event_scores[k][j]);
            labels.push_back(l);
        }
        we.event_level.push_back(evaluate_indicator(
            static_cast<int>(j), win.half_width_s, scores, labels, ecfg));

        std::vector<double> sscores;
        std::vector<int> slabels;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::int8_t l = events.at(pairs[i].event_index).labels.at(j);
            if (l == -1) continue;
            sscores.push_back(segment_probs[i][j]);
            slabels.push_back(l);
        }
        we.segment_level.push_back(evaluate_indicator(
            static_cast<int>(j), win.half_width_s, sscores, slabels, seg_cfg));
    }
    return we;
}

} // namespace ecglab
