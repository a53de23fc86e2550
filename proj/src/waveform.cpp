#include "ecglab/waveform.hpp"
#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ecglab {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'G', 'W'};

template <typename T>
void write_le(std::ostream& os, T value) {
    // Host is little-endian on every supported target.
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& value) {
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    return is.good();
}

} // namespace

TimeMicros Recording::end_time_micros() const {
    const auto n = static_cast<std::int64_t>(raw.size());
    return start_time_micros + n * kMicrosPerSecond / sample_rate;
}

Recording load_recording(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open waveform file " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic, not a waveform file");

    std::uint16_t version = 0;
    std::uint32_t rate = 0;
    double gain = 0.0;
    std::int64_t start = 0;
    std::uint64_t n_samples = 0;
    std::uint16_t id_len = 0;
    if (!read_le(in, version) || !read_le(in, rate) || !read_le(in, gain) ||
        !read_le(in, start) || !read_le(in, n_samples) || !read_le(in, id_len))
        throw FormatError(path.string() + ": truncated header");
    if (version != kWaveformFormatVersion)
        throw FormatError(path.string() + ": unsupported format version " +
                          std::to_string(version));
    if (rate == 0)
        throw FormatError(path.string() + ": sample rate must be positive");
    if (n_samples == 0)
        throw FormatError(path.string() + ": empty recording");

    Recording rec;
    rec.visit_id.resize(id_len);
    in.read(rec.visit_id.data(), id_len);
    if (!in) throw FormatError(path.string() + ": truncated visit id");

    rec.sample_rate = rate;
    rec.gain = gain;
    rec.start_time_micros = start;
    rec.raw.resize(n_samples);
    in.read(reinterpret_cast<char*>(rec.raw.data()),
            static_cast<std::streamsize>(n_samples * sizeof(std::int16_t)));
    const auto got = in.gcount();
    if (static_cast<std::uint64_t>(got) != n_samples * sizeof(std::int16_t))
        throw IntegrityError(path.string() + ": header declares " +
                             std::to_string(n_samples) + " samples but body holds " +
                             std::to_string(got / sizeof(std::int16_t)));
    // Trailing bytes would make the declared duration inconsistent.
    char extra;
    if (in.read(&extra, 1))
        throw IntegrityError(path.string() + ": trailing bytes after sample body");
    return rec;
}

void write_recording(const Recording& rec, const std::filesystem::path& path) {
    if (rec.sample_rate == 0) throw DataError("recording has zero sample rate");
    if (rec.raw.empty()) throw DataError("recording has no samples");
    if (rec.visit_id.size() > UINT16_MAX)
        throw DataError("visit id too long for waveform header");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create waveform file " + path.string());
    out.write(kMagic, 4);
    write_le(out, kWaveformFormatVersion);
    write_le(out, rec.sample_rate);
    write_le(out, rec.gain);
    write_le(out, rec.start_time_micros);
    write_le(out, static_cast<std::uint64_t>(rec.raw.size()));
    write_le(out, static_cast<std::uint16_t>(rec.visit_id.size()));
    out.write(rec.visit_id.data(),
              static_cast<std::streamsize>(rec.visit_id.size()));
    out.write(reinterpret_cast<const char*>(rec.raw.data()),
              static_cast<std::streamsize>(rec.raw.size() * sizeof(std::int16_t)));
    if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::int64_t> tile_offsets(const Recording& rec, TimeMicros center,
                                       const WindowSpec& win) {
    std::vector<std::int64_t> offsets;
    const std::int64_t n = static_cast<std::int64_t>(rec.size());
    const std::int64_t L = win.segment_samples(rec.sample_rate);
    if (L <= 0 || n < L) return offsets;

    const std::int64_t rate = rec.sample_rate;
    // Window bounds relative to the recording start, in micros. Closed
    // interval on both ends.
    const std::int64_t lo = center - win.half_width_micros() - rec.start_time_micros;
    const std::int64_t hi = center + win.half_width_micros() - rec.start_time_micros;

    // Sample k sits at k*1e6/rate micros after the recording start. Compare
    // in the exact rational domain k*1e6 vs bound*rate; 128-bit keeps the
    // products safe for any realistic epoch offset.
    const auto time_ge = [&](std::int64_t k, std::int64_t bound_us) {
        return static_cast<__int128>(k) * kMicrosPerSecond >=
               static_cast<__int128>(bound_us) * rate;
    };
    const auto time_le = [&](std::int64_t k, std::int64_t bound_us) {
        return static_cast<__int128>(k) * kMicrosPerSecond <=
               static_cast<__int128>(bound_us) * rate;
    };

    // First grid tile whose start is inside the window.
    std::int64_t m = 0;
    if (lo > 0) {
        // smallest m with m*L*1e6 >= lo*rate
        const __int128 num = static_cast<__int128>(lo) * rate;
        const __int128 den = static_cast<__int128>(L) * kMicrosPerSecond;
        m = static_cast<std::int64_t>((num + den - 1) / den);
    }
    for (; m * L + L <= n; ++m) {
        const std::int64_t k = m * L;
        if (!time_ge(k, lo)) continue; // defensive for m==0 with lo<=0 edge
        if (!time_le(k + L, hi)) break;
        offsets.push_back(k);
    }
    return offsets;
}

Segment slice_segment(const Recording& rec, std::int64_t first_sample,
                      const WindowSpec& win) {
    const std::int64_t L = win.segment_samples(rec.sample_rate);
    if (first_sample < 0 || first_sample + L > static_cast<std::int64_t>(rec.size()))
        throw ShapeError("segment slice out of recording bounds");
    Segment seg;
    seg.visit_id = rec.visit_id;
    seg.recording_offset = first_sample;
    seg.start_time_micros =
        rec.start_time_micros + first_sample * kMicrosPerSecond / rec.sample_rate;
    seg.values.resize(static_cast<std::size_t>(L));
    for (std::int64_t i = 0; i < L; ++i)
        seg.values[static_cast<std::size_t>(i)] =
            rec.raw[static_cast<std::size_t>(first_sample + i)] * rec.gain;
    return seg;
}

std::vector<Segment> extract_segments(const Recording& rec, TimeMicros center,
                                      const WindowSpec& win) {
    std::vector<Segment> out;
    for (std::int64_t k : tile_offsets(rec, center, win))
        out.push_back(slice_segment(rec, k, win));
    return out;
}

namespace {

constexpr double kFlatStdThreshold = 1e-8;

void zscore_values(const double* in, std::size_t n, double* out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += in[i];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = in[i] - mean;
        ss += d * d;
    }
    const double std_pop = std::sqrt(ss / static_cast<double>(n));
    if (std_pop < kFlatStdThreshold) {
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
        return;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = (in[i] - mean) / std_pop;
}

} // namespace

Segment normalize_segment(const Segment& seg, Normalization policy,
                          std::uint32_t sample_rate) {
    WindowSpec win;
    if (static_cast<std::int64_t>(seg.values.size()) !=
        win.segment_samples(sample_rate))
        throw ShapeError("segment does not have the full length");
    Segment out = seg;
    if (policy == Normalization::raw) return out;
    zscore_values(seg.values.data(), seg.values.size(), out.values.data());
    out.normalization = Normalization::zscore;
    return out;
}

void zscore_into(const std::int16_t* raw, std::size_t n, double gain, float* out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += raw[i] * gain;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = raw[i] * gain - mean;
        ss += d * d;
    }
    const double std_pop = std::sqrt(ss / static_cast<double>(n));
    if (std_pop < kFlatStdThreshold) {
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.0f;
        return;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>((raw[i] * gain - mean) / std_pop);
}

WaveformManifest WaveformManifest::load(const std::filesystem::path& csv_path) {
    auto rows = read_csv_with_header(csv_path, {"visit_id", "path"});
    WaveformManifest m;
    const auto base = csv_path.parent_path();
    for (const auto& row : rows) {
        if (row.fields.size() != 2)
            throw FormatError(csv_path.string() + ": line " +
                              std::to_string(row.line_no) + ": expected 2 columns");
        m.entries.push_back({row.fields[0], base / row.fields[1]});
    }
    return m;
}

void WaveformManifest::save(const std::filesystem::path& csv_path) const {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + csv_path.string());
    const auto base = csv_path.parent_path();
    out << "visit_id,path\n";
    for (const auto& e : entries) {
        // Already-relative entries are taken as relative to the manifest.
        auto rel = e.path.is_absolute() ? e.path.lexically_relative(base) : e.path;
        if (rel.empty()) rel = e.path; // different root: keep it absolute
        write_csv_row(out, {e.visit_id, rel.generic_string()});
    }
}

RecordingSet RecordingSet::load(const WaveformManifest& manifest,
                                std::uint32_t expected_rate) {
    RecordingSet set;
    for (const auto& e : manifest.entries) {
        Recording rec = load_recording(e.path);
        if (rec.visit_id != e.visit_id)
            throw IntegrityError(e.path.string() + ": manifest visit '" + e.visit_id +
                                 "' does not match file visit '" + rec.visit_id + "'");
        if (expected_rate != 0 && rec.sample_rate != expected_rate)
            throw DataError(e.path.string() + ": sample rate " +
                            std::to_string(rec.sample_rate) +
                            " Hz differs from configured " +
                            std::to_string(expected_rate) + " Hz (no resampling)");
        set.add(std::move(rec));
    }
    return set;
}

void RecordingSet::add(Recording rec) {
    by_visit[rec.visit_id].push_back(recordings.size());
    recordings.push_back(std::move(rec));
}

} // namespace ecglab
