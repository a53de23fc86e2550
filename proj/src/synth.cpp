#include "ecglab/synth.hpp"

#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"
#include "ecglab/labels.hpp"
#include "ecglab/rng.hpp"
#include "ecglab/time_util.hpp"
#include "ecglab/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace ecglab {

namespace {

constexpr double kGain = 0.001;     // millivolts per raw unit
constexpr double kBeatHz = 1.25;    // base beat frequency
constexpr double kSignatureAmp = 0.5;

double signature_hz(std::size_t class_id) {
    return 0.7 + 0.4 * static_cast<double>(class_id);
}

std::string visit_name(std::size_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "V%05zu", v);
    return buf;
}

std::string lab_name(std::size_t class_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "LAB%03zu", class_id);
    return buf;
}

void check_prob_vector(const std::vector<double>& v, std::size_t n,
                       const char* what) {
    if (v.size() != n)
        throw ConfigError(std::string(what) + " has " + std::to_string(v.size()) +
                          " entries, expected one per class (" +
                          std::to_string(n) + ")");
    for (double p : v)
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError(std::string(what) + " entries must lie in [0, 1]");
}

} // namespace

void SynthConfig::validate() const {
    if (n_visits < 1) throw ConfigError("n_visits must be >= 1");
    if (recordings_per_visit < 1)
        throw ConfigError("recordings_per_visit must be >= 1");
    if (events_per_visit < 1) throw ConfigError("events_per_visit must be >= 1");
    if (sample_rate == 0) throw ConfigError("sample_rate must be positive");
    if (n_classes < 1) throw ConfigError("n_classes must be >= 1");
    check_prob_vector(effect_sizes, n_classes, "effect_sizes");
    check_prob_vector(missing_prob, n_classes, "missing_prob");
    check_prob_vector(abnormal_prob, n_classes, "abnormal_prob");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
        throw ConfigError("noise_std must be finite and non-negative");
    if (recording_seconds < 1) throw ConfigError("recording_seconds must be >= 1");
    if (recording_gap_seconds < recording_seconds)
        throw ConfigError("recording_gap_seconds must be >= recording_seconds");
}

std::vector<double> cycle_values(const std::vector<double>& pattern, std::size_t n) {
    if (pattern.empty()) throw ConfigError("cannot cycle an empty value list");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = pattern[i % pattern.size()];
    return out;
}

SynthPaths generate_cohort(const SynthConfig& cfg,
                           const std::filesystem::path& out_dir) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "waveforms", ec);
    if (ec)
        throw IoError("cannot create " + (out_dir / "waveforms").string() + ": " +
                      ec.message());

    const std::size_t R = cfg.recordings_per_visit;
    const std::size_t E = cfg.events_per_visit;
    const std::size_t C = cfg.n_classes;
    const TimeMicros base = parse_iso8601_micros("2025-01-01T00:00:00Z");
    const TimeMicros visit_stride = 86'400 * kMicrosPerSecond;
    const TimeMicros gap = static_cast<TimeMicros>(cfg.recording_gap_seconds) *
                           kMicrosPerSecond;
    const TimeMicros rec_span = static_cast<TimeMicros>(cfg.recording_seconds) *
                                kMicrosPerSecond;

    SynthPaths paths;
    paths.waveform_manifest = out_dir / "waveforms.csv";
    paths.labs = out_dir / "labs.csv";
    paths.thresholds = out_dir / "thresholds.csv";
    paths.ground_truth = out_dir / "ground_truth.csv";

    // Threshold table: one class per synthetic analyte, directions
    // alternating so both comparison paths get exercised downstream.
    {
        std::ofstream out(paths.thresholds, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + paths.thresholds.string());
        write_csv_row(out, {"class_id", "lab_name", "direction", "threshold", "unit"});
        for (std::size_t j = 0; j < C; ++j)
            write_csv_row(out, {std::to_string(j), lab_name(j),
                                j % 2 == 0 ? "below" : "above", "1", "mmol/L"});
    }

    std::ofstream manifest(paths.waveform_manifest,
                           std::ios::binary | std::ios::trunc);
    if (!manifest) throw IoError("cannot create " + paths.waveform_manifest.string());
    std::ofstream labs(paths.labs, std::ios::binary | std::ios::trunc);
    if (!labs) throw IoError("cannot create " + paths.labs.string());
    std::ofstream truth(paths.ground_truth, std::ios::binary | std::ios::trunc);
    if (!truth) throw IoError("cannot create " + paths.ground_truth.string());
    write_csv_row(manifest, {"visit_id", "path"});
    write_csv_row(labs, {"visit_id", "timestamp", "lab_name", "value", "unit"});
    write_csv_row(truth,
                  {"visit_id", "timestamp", "class_id", "true_label", "planted_feature"});

    const double rate = static_cast<double>(cfg.sample_rate);
    std::vector<std::int16_t> raw;
    std::vector<double> amp(C);

    for (std::size_t v = 0; v < cfg.n_visits; ++v) {
        const std::string visit = visit_name(v);
        const TimeMicros t0 = base + static_cast<TimeMicros>(v) * visit_stride;

        // Labels first, all from one per-visit stream: event-major,
        // class-minor, true label then missingness.
        Rng lab_rng(derive_seed(cfg.seed, "synth-labels", v));
        std::vector<std::vector<std::int8_t>> true_labels(E);
        std::vector<std::vector<bool>> missing(E);
        for (std::size_t e = 0; e < E; ++e) {
            true_labels[e].resize(C);
            missing[e].resize(C);
            for (std::size_t j = 0; j < C; ++j) {
                true_labels[e][j] = lab_rng.uniform01() < cfg.abnormal_prob[j] ? 1 : 0;
                // Drawn independently of the label: missing completely at random.
                missing[e][j] = lab_rng.uniform01() < cfg.missing_prob[j];
            }
        }

        // Each event sits (near) the center of recording e mod R; events
        // sharing a recording are nudged apart by whole seconds so their
        // timestamps stay distinct.
        std::vector<TimeMicros> event_time(E);
        for (std::size_t e = 0; e < E; ++e) {
            const std::size_t r = e % R;
            event_time[e] = t0 + static_cast<TimeMicros>(r) * gap + rec_span / 2 +
                            static_cast<TimeMicros>(e / R) * kMicrosPerSecond;
        }

        for (std::size_t r = 0; r < R; ++r) {
            // Sum of signatures this recording carries: one term per
            // abnormal label of each event centered on it.
            std::fill(amp.begin(), amp.end(), 0.0);
            for (std::size_t e = r; e < E; e += R)
                for (std::size_t j = 0; j < C; ++j)
                    if (true_labels[e][j] == 1)
                        amp[j] += kSignatureAmp * cfg.effect_sizes[j];

            Rng noise_rng(derive_seed(cfg.seed, "synth-noise", v * R + r));
            const std::size_t n = cfg.recording_seconds * cfg.sample_rate;
            raw.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double t = static_cast<double>(k) / rate;
                double x = 0.6 * std::sin(2.0 * std::numbers::pi * kBeatHz * t) +
                           0.2 * std::sin(4.0 * std::numbers::pi * kBeatHz * t);
                for (std::size_t j = 0; j < C; ++j)
                    if (amp[j] != 0.0)
                        x += amp[j] * std::sin(2.0 * std::numbers::pi * signature_hz(j) * t);
                x += cfg.noise_std * noise_rng.gaussian();
                const long q = std::lround(x / kGain);
                raw[k] = static_cast<std::int16_t>(std::clamp(q, -32767L, 32767L));
            }

            Recording rec;
            rec.visit_id = visit;
            rec.start_time_micros = t0 + static_cast<TimeMicros>(r) * gap;
            rec.sample_rate = cfg.sample_rate;
            rec.gain = kGain;
            rec.raw = raw;
            const std::string fname =
                visit + "_r" + std::to_string(r) + ".ecgw";
            write_recording(rec, out_dir / "waveforms" / fname);
            write_csv_row(manifest, {visit, "waveforms/" + fname});
        }

        for (std::size_t e = 0; e < E; ++e) {
            const std::string ts = format_iso8601_micros(event_time[e]);
            for (std::size_t j = 0; j < C; ++j) {
                const bool abnormal = true_labels[e][j] == 1;
                if (!missing[e][j]) {
                    // A value strictly on the right side of threshold 1:
                    // abnormal means < 1 for below-classes, > 1 for above.
                    const bool below = j % 2 == 0;
                    const double value = (abnormal == below) ? 0.5 : 1.5;
                    write_csv_row(labs, {visit, ts, lab_name(j),
                                         format_double(value), "mmol/L"});
                }
                const double feature =
                    abnormal ? kSignatureAmp * cfg.effect_sizes[j] : 0.0;
                write_csv_row(truth, {visit, ts, std::to_string(j),
                                      abnormal ? "1" : "0", format_double(feature)});
            }
        }
    }

    if (!manifest || !labs || !truth)
        throw IoError("short write while generating cohort in " + out_dir.string());
    return paths;
}

} // namespace ecglab
