#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ecglab {

// Synthetic cohort with planted, tunable waveform-label correlations.
// Class j's abnormality is encoded as an additive sine signature at a
// class-specific frequency; its amplitude scales with the class's effect
// size, so a class with effect 0 has labels carrying no waveform trace at
// all. The generation model is simple enough to reason about analytically:
//
//   x(t) = 0.6 sin(2*pi*1.25 t) + 0.2 sin(2*pi*2.5 t)            [beat]
//        + sum over abnormal classes j of e_j * 0.5 sin(2*pi*f_j t)
//        + Gaussian noise (sd = noise_std),   f_j = 0.7 + 0.4 j Hz
//
// quantized to int16 at 0.001 mV per unit.
struct SynthConfig {
    std::size_t n_visits = 50;
    std::size_t recordings_per_visit = 1;
    std::size_t events_per_visit = 1;
    std::uint32_t sample_rate = 500;
    std::size_t n_classes = 8;
    std::vector<double> effect_sizes = {1.0, 1.0, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0};
    double noise_std = 0.25; // millivolts
    std::vector<double> missing_prob = std::vector<double>(8, 0.3);
    std::vector<double> abnormal_prob = std::vector<double>(8, 0.3);
    std::size_t recording_seconds = 60;
    // Consecutive recordings of a visit start this far apart, so each
    // event's 1-hour window sees only its own recording.
    std::size_t recording_gap_seconds = 7500;
    std::uint64_t seed = 0;

    void validate() const;
};

// Repeats `pattern` until it covers n entries (helper for CLI flags like
// --effects 0,0.3,1 applied to more classes than listed values).
std::vector<double> cycle_values(const std::vector<double>& pattern, std::size_t n);

struct SynthPaths {
    std::filesystem::path waveform_manifest;
    std::filesystem::path labs;
    std::filesystem::path thresholds;
    std::filesystem::path ground_truth;
};

// Writes waveform binaries plus manifest, lab events CSV, threshold CSV and
// ground_truth.csv (visit_id, timestamp, class_id, true_label,
// planted_feature) under out_dir. Byte-identical for a fixed config: every
// random draw comes from a stream derived from (seed, visit), so neither
// thread count nor generation order can leak into the files.
SynthPaths generate_cohort(const SynthConfig& cfg,
                           const std::filesystem::path& out_dir);

} // namespace ecglab
