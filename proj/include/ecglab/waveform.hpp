#pragma once

#include "ecglab/time_util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ecglab {

// One continuous single-lead ECG recording. Amplitudes are stored as the
// raw scaled int16 samples from the file plus the gain factor, so a loaded
// recording can be written back byte-identically.
struct Recording {
    std::string visit_id;
    TimeMicros start_time_micros = 0;
    std::uint32_t sample_rate = 0; // samples/second
    double gain = 0.0;             // millivolts per raw unit
    std::vector<std::int16_t> raw;

    std::size_t size() const { return raw.size(); }
    double sample_mv(std::size_t i) const { return raw[i] * gain; }
    // End of the covered time span: start + n/rate, exact at micro resolution
    // when the rate divides 1e6 (canonical 500 Hz does).
    TimeMicros end_time_micros() const;
};

enum class Normalization { raw, zscore };

struct Segment {
    std::string visit_id;
    std::int64_t recording_offset = 0; // index of first sample
    TimeMicros start_time_micros = 0;
    std::vector<double> values; // millivolts, exactly seg_seconds*rate long
    Normalization normalization = Normalization::raw;
};

// Evaluation window of +/- half_width seconds around a blood-test timestamp.
struct WindowSpec {
    std::int64_t half_width_s = 3600; // canonical 3600, 1800, 900
    std::int64_t seg_seconds = 10;

    std::int64_t half_width_micros() const { return half_width_s * kMicrosPerSecond; }
    std::int64_t segment_samples(std::uint32_t rate) const {
        return seg_seconds * static_cast<std::int64_t>(rate);
    }
};

// Waveform container format, little-endian:
//   magic "ECGW" | version u16 | sample_rate u32 | gain f64 |
//   start_time_micros i64 | n_samples u64 | visit_id_len u16 |
//   visit_id utf-8 | n_samples x i16
constexpr std::uint16_t kWaveformFormatVersion = 1;

Recording load_recording(const std::filesystem::path& path);
void write_recording(const Recording& rec, const std::filesystem::path& path);

// First-sample offsets of every 10-second slice that lies entirely inside
// both the recording and the closed interval [center - hw, center + hw].
// Slices sit on the fixed 10-second grid anchored at the recording start,
// so narrower windows always select a subset of a wider window's slices.
std::vector<std::int64_t> tile_offsets(const Recording& rec, TimeMicros center,
                                       const WindowSpec& win);

std::vector<Segment> extract_segments(const Recording& rec, TimeMicros center,
                                      const WindowSpec& win);

// Pulls one segment by offset, without normalization.
Segment slice_segment(const Recording& rec, std::int64_t first_sample,
                      const WindowSpec& win);

// zscore: (x - mean) / population std; segments with std < 1e-8 map to all
// zeros. raw: returned unchanged.
Segment normalize_segment(const Segment& seg, Normalization policy,
                          std::uint32_t sample_rate);

// In-place float variant used when materializing training/eval batches.
// Same arithmetic as normalize_segment (computed in double).
void zscore_into(const std::int16_t* raw, std::size_t n, double gain, float* out);

// Manifest CSV (columns: visit_id, path) mapping visits to waveform files.
// Paths are relative to the manifest's directory.
struct WaveformManifest {
    struct Entry {
        std::string visit_id;
        std::filesystem::path path;
    };
    std::vector<Entry> entries;

    static WaveformManifest load(const std::filesystem::path& csv_path);
    void save(const std::filesystem::path& csv_path) const;
};

// All recordings of a cohort, indexed by visit.
struct RecordingSet {
    std::vector<Recording> recordings;
    std::map<std::string, std::vector<std::size_t>> by_visit;

    // Loads every file in the manifest. expected_rate > 0 rejects recordings
    // with a different sample rate (resampling is unsupported).
    static RecordingSet load(const WaveformManifest& manifest,
                             std::uint32_t expected_rate);

    void add(Recording rec);
};

} // namespace ecglab
