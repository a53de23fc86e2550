// Command-line front end: synth, ingest, split, train, eval, report.
// Exit codes: 0 success, 1 data/format/config errors, 2 usage errors.

#include "ecglab/errors.hpp"
#include "ecglab/labels.hpp"
#include "ecglab/manifest.hpp"
#include "ecglab/pipeline.hpp"
#include "ecglab/report.hpp"
#include "ecglab/split.hpp"
#include "ecglab/synth.hpp"
#include "ecglab/train.hpp"
#include "ecglab/waveform.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace {

using namespace ecglab;

struct CommonFlags {
    std::uint64_t seed = 0;
    int threads = 0; // 0 = library default
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& common, bool out_required) {
    cmd->add_option("--seed", common.seed, "Root random seed")
        ->capture_default_str();
    cmd->add_option("--threads", common.threads,
                    "Worker thread cap (0 = default)")
        ->capture_default_str();
    auto* out = cmd->add_option("--out", common.out_dir, "Output directory");
    if (out_required) out->required();
    else out->capture_default_str();
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
    std::filesystem::path p(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
    return p;
}

RunManifest begin_manifest(const std::string& command, std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.seed = seed;
    m.started_at = now_iso8601();
    return m;
}

void finish_manifest(RunManifest& m, const std::filesystem::path& out_dir) {
    m.finished_at = now_iso8601();
    const auto path = out_dir / ("manifest_" + m.command + ".json");
    m.save(path);
    std::cout << "manifest: " << path.string() << "\n";
}

std::pair<int, int> parse_ratio(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("ratio must look like 4:1, got '" + text + "'");
    try {
        const int train = std::stoi(text.substr(0, colon));
        const int test = std::stoi(text.substr(colon + 1));
        return {train, test};
    } catch (const std::exception&) {
        throw ConfigError("ratio must look like 4:1, got '" + text + "'");
    }
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
    CommonFlags common;
    std::size_t visits = 50, recordings = 1, events = 1, classes = 8;
    std::vector<double> effects = {1.0, 1.0, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0};
    std::vector<double> missing = {0.3};
    std::vector<double> abnormal = {0.3};
    double noise = 0.25;
    std::size_t rec_seconds = 60, gap_seconds = 7500;
    std::uint32_t rate = 500;
};

int run_synth(const SynthFlags& f) {
    apply_threads(f.common.threads);
    const auto out_dir = ensure_out_dir(f.common.out_dir);

    SynthConfig cfg;
    cfg.n_visits = f.visits;
    cfg.recordings_per_visit = f.recordings;
    cfg.events_per_visit = f.events;
    cfg.sample_rate = f.rate;
    cfg.n_classes = f.classes;
    cfg.effect_sizes = cycle_values(f.effects, f.classes);
    cfg.missing_prob = cycle_values(f.missing, f.classes);
    cfg.abnormal_prob = cycle_values(f.abnormal, f.classes);
    cfg.noise_std = f.noise;
    cfg.recording_seconds = f.rec_seconds;
    cfg.recording_gap_seconds = f.gap_seconds;
    cfg.seed = f.common.seed;

    auto manifest = begin_manifest("synth", cfg.seed);
    const auto paths = generate_cohort(cfg, out_dir);
    manifest.config = {{"n_visits", cfg.n_visits},
                       {"recordings_per_visit", cfg.recordings_per_visit},
                       {"events_per_visit", cfg.events_per_visit},
                       {"sample_rate", cfg.sample_rate},
                       {"n_classes", cfg.n_classes},
                       {"effect_sizes", cfg.effect_sizes},
                       {"missing_prob", cfg.missing_prob},
                       {"abnormal_prob", cfg.abnormal_prob},
                       {"noise_std", cfg.noise_std},
                       {"recording_seconds", cfg.recording_seconds},
                       {"recording_gap_seconds", cfg.recording_gap_seconds}};
    manifest.add_output(paths.waveform_manifest);
    manifest.add_output(paths.labs);
    manifest.add_output(paths.thresholds);
    manifest.add_output(paths.ground_truth);
    finish_manifest(manifest, out_dir);
    std::cout << "cohort: " << cfg.n_visits << " visits, " << cfg.n_classes
              << " classes -> " << out_dir.string() << "\n";
    return 0;
}

// ---- ingest ---------------------------------------------------------------

struct IngestFlags {
    CommonFlags common;
    std::string waveforms, labs, thresholds;
    std::uint32_t rate = 500;
};

int run_ingest(const IngestFlags& f) {
    apply_threads(f.common.threads);
    auto manifest = begin_manifest("ingest", f.common.seed);
    manifest.add_input(f.waveforms);
    manifest.add_input(f.labs);
    manifest.add_input(f.thresholds);

    const auto table = ThresholdTable::load(f.thresholds);
    const auto rows = load_lab_rows(f.labs, &table);
    const auto events = build_events(rows, table);
    const auto wf = WaveformManifest::load(f.waveforms);
    const auto recordings = RecordingSet::load(wf, f.rate);

    std::size_t observed = 0, abnormal = 0;
    for (const auto& ev : events)
        for (std::int8_t l : ev.labels) {
            if (l != -1) ++observed;
            if (l == 1) ++abnormal;
        }
    std::cout << "classes: " << table.n_classes() << "\n"
              << "lab rows: " << rows.size() << "\n"
              << "events: " << events.size() << "\n"
              << "recordings: " << recordings.recordings.size() << " over "
              << recordings.by_visit.size() << " visits\n"
              << "observed labels: " << observed << " (" << abnormal
              << " abnormal)\n";

    manifest.config = {{"sample_rate", f.rate}};
    finish_manifest(manifest, ensure_out_dir(f.common.out_dir));
    return 0;
}

// ---- split ----------------------------------------------------------------

struct SplitFlags {
    CommonFlags common;
    std::string waveforms;
    std::string ratio = "4:1";
};

int run_split(const SplitFlags& f) {
    apply_threads(f.common.threads);
    const auto out_dir = ensure_out_dir(f.common.out_dir);
    const auto [train_parts, test_parts] = parse_ratio(f.ratio);

    auto manifest = begin_manifest("split", f.common.seed);
    manifest.add_input(f.waveforms);

    const auto wf = WaveformManifest::load(f.waveforms);
    std::set<std::string> visits;
    for (const auto& e : wf.entries) visits.insert(e.visit_id);

    const auto split = split_by_visit(visits, train_parts, test_parts, f.common.seed);
    const auto split_path = out_dir / "split.csv";
    split.save(split_path);

    std::cout << "visits: " << visits.size() << " -> train "
              << split.train_visits.size() << ", test "
              << split.test_visits.size() << "\n";

    manifest.config = {{"ratio", f.ratio}};
    manifest.add_output(split_path);
    manifest.add_output(split_path.string() + ".meta.json");
    finish_manifest(manifest, out_dir);
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainFlags {
    CommonFlags common;
    std::string waveforms, labs, thresholds, split;
    std::uint32_t rate = 500;
    std::int64_t window = 3600;
    std::size_t epochs = 20, batch_size = 256;
    double lr = 1e-4;
    // architecture
    std::size_t kernel = 7, stem_channels = 16, stem_stride = 5;
    std::vector<std::size_t> channels = {24, 32, 48};
    std::vector<std::size_t> strides = {2, 2, 2};
};

int run_train(const TrainFlags& f) {
    apply_threads(f.common.threads);
    const auto out_dir = ensure_out_dir(f.common.out_dir);

    auto manifest = begin_manifest("train", f.common.seed);
    manifest.add_input(f.waveforms);
    manifest.add_input(f.labs);
    manifest.add_input(f.thresholds);
    manifest.add_input(f.split);

    const auto table = ThresholdTable::load(f.thresholds);
    const auto events = build_events(load_lab_rows(f.labs, &table), table);
    const auto recordings = RecordingSet::load(WaveformManifest::load(f.waveforms),
                                               f.rate);
    const auto split = SplitAssignment::load(f.split);

    const auto train_events = filter_events_by_visits(events, split.train_visits);
    WindowSpec win;
    win.half_width_s = f.window;
    const auto pairs = pair_segments(train_events, recordings, win);
    std::cout << "train events: " << train_events.size() << ", pairs: "
              << pairs.size() << "\n";

    ModelConfig mcfg;
    mcfg.input_length =
        static_cast<std::size_t>(win.segment_samples(f.rate));
    mcfg.n_classes = static_cast<std::size_t>(table.n_classes());
    mcfg.kernel_size = f.kernel;
    mcfg.stem_channels = f.stem_channels;
    mcfg.stem_stride = f.stem_stride;
    mcfg.channels = f.channels;
    mcfg.strides = f.strides;

    TrainConfig tcfg;
    tcfg.batch_size = f.batch_size;
    tcfg.learning_rate = f.lr;
    tcfg.epochs = f.epochs;
    tcfg.seed = f.common.seed;

    Network net(mcfg);
    const auto result =
        train(net, pairs, train_events, recordings, tcfg, LossConfig{},
              [](std::size_t epoch, double loss) {
                  std::cout << "epoch " << epoch << " loss " << loss << std::endl;
              });

    const auto ckpt_path = out_dir / "model.ckpt";
    const auto trace_path = out_dir / "loss_trace.csv";
    save_checkpoint(ckpt_path, net, tcfg);
    save_loss_trace(trace_path, result.epoch_loss);

    manifest.config = {{"window", f.window},
                       {"epochs", f.epochs},
                       {"batch_size", f.batch_size},
                       {"learning_rate", f.lr},
                       {"sample_rate", f.rate},
                       {"kernel_size", f.kernel},
                       {"stem_channels", f.stem_channels},
                       {"stem_stride", f.stem_stride},
                       {"channels", f.channels},
                       {"strides", f.strides},
                       {"optimizer", "adam"}};
    manifest.add_output(ckpt_path);
    manifest.add_output(trace_path);
    finish_manifest(manifest, out_dir);
    return 0;
}

// ---- eval -----------------------------------------------------------------

struct EvalFlags {
    CommonFlags common;
    std::string waveforms, labs, thresholds, split, model;
    std::uint32_t rate = 500;
    std::vector<std::int64_t> windows = {3600, 1800, 900};
    std::size_t max_test_segments = 200;
    std::size_t boot = 2000;
    std::size_t batch_size = 256;
};

int run_eval(const EvalFlags& f) {
    apply_threads(f.common.threads);
    const auto out_dir = ensure_out_dir(f.common.out_dir);

    auto manifest = begin_manifest("eval", f.common.seed);
    manifest.add_input(f.waveforms);
    manifest.add_input(f.labs);
    manifest.add_input(f.thresholds);
    manifest.add_input(f.split);
    manifest.add_input(f.model);

    const auto table = ThresholdTable::load(f.thresholds);
    const auto events = build_events(load_lab_rows(f.labs, &table), table);
    const auto recordings = RecordingSet::load(WaveformManifest::load(f.waveforms),
                                               f.rate);
    const auto split = SplitAssignment::load(f.split);
    const auto net = network_from_checkpoint(load_checkpoint(f.model));
    if (net.config().n_classes != static_cast<std::size_t>(table.n_classes()))
        throw DataError("model predicts " + std::to_string(net.config().n_classes) +
                        " classes but the threshold table has " +
                        std::to_string(table.n_classes()));

    const auto test_events = filter_events_by_visits(events, split.test_visits);
    std::cout << "test events: " << test_events.size() << "\n";

    EvalConfig ecfg;
    ecfg.n_boot = f.boot;
    ecfg.boot_seed = f.common.seed;

    for (const std::int64_t w : f.windows) {
        WindowSpec win;
        win.half_width_s = w;
        const auto we = evaluate_window(net, test_events, recordings, win,
                                        f.max_test_segments, f.common.seed, ecfg,
                                        f.batch_size);
        const auto label = window_label(w);
        const auto event_csv = out_dir / ("report_" + label + ".csv");
        const auto event_md = out_dir / ("report_" + label + ".md");
        const auto seg_csv = out_dir / ("report_" + label + "_segments.csv");
        write_report_csv(event_csv, build_report(we.event_level, table));
        write_report_markdown(event_md, build_report(we.event_level, table));
        write_report_csv(seg_csv, build_report(we.segment_level, table));
        manifest.add_output(event_csv);
        manifest.add_output(event_md);
        manifest.add_output(seg_csv);
        std::cout << "window " << label << ": " << we.n_events << " events, "
                  << we.n_segments << " segments\n";
    }

    manifest.config = {{"windows", f.windows},
                       {"max_test_segments", f.max_test_segments},
                       {"boot", f.boot},
                       {"sample_rate", f.rate},
                       {"batch_size", f.batch_size}};
    finish_manifest(manifest, out_dir);
    return 0;
}

// ---- report ---------------------------------------------------------------

struct ReportFlags {
    CommonFlags common;
    std::vector<std::string> inputs;
};

int run_report(const ReportFlags& f) {
    const auto out_dir = ensure_out_dir(f.common.out_dir);
    auto manifest = begin_manifest("report", f.common.seed);

    std::vector<ReportRow> rows;
    for (const auto& in : f.inputs) {
        manifest.add_input(in);
        auto part = load_report_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    sort_report_rows(rows);

    const auto md_path = out_dir / "report.md";
    const auto summary_path = out_dir / "summary.txt";
    write_report_markdown(md_path, rows);
    {
        std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + summary_path.string());
        out << render_stratified_summary(rows);
        if (!out) throw IoError("short write to " + summary_path.string());
    }
    std::cout << render_stratified_summary(rows);

    manifest.add_output(md_path);
    manifest.add_output(summary_path);
    finish_manifest(manifest, out_dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG-to-lab-value pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file");
    app.get_config_ptr()->configurable(false);

    SynthFlags synth_f;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic cohort with planted signal");
    add_common(synth_cmd, synth_f.common, true);
    synth_cmd->add_option("--visits", synth_f.visits, "Visit count")
        ->capture_default_str();
    synth_cmd->add_option("--recordings", synth_f.recordings,
                          "Recordings per visit")->capture_default_str();
    synth_cmd->add_option("--events", synth_f.events, "Blood-test events per visit")
        ->capture_default_str();
    synth_cmd->add_option("--classes", synth_f.classes, "Indicator class count")
        ->capture_default_str();
    synth_cmd->add_option("--effects", synth_f.effects,
                          "Per-class effect sizes in [0,1], cycled")
        ->delimiter(',')->capture_default_str();
    synth_cmd->add_option("--missing", synth_f.missing,
                          "Per-class missing-label probability, cycled")
        ->delimiter(',')->capture_default_str();
    synth_cmd->add_option("--abnormal", synth_f.abnormal,
                          "Per-class abnormal-rate, cycled")
        ->delimiter(',')->capture_default_str();
    synth_cmd->add_option("--noise", synth_f.noise, "Waveform noise sd (mV)")
        ->capture_default_str();
    synth_cmd->add_option("--rec-seconds", synth_f.rec_seconds,
                          "Recording length (s)")->capture_default_str();
    synth_cmd->add_option("--gap-seconds", synth_f.gap_seconds,
                          "Start-to-start recording spacing (s)")
        ->capture_default_str();
    synth_cmd->add_option("--rate", synth_f.rate, "Sample rate (Hz)")
        ->capture_default_str();

    IngestFlags ingest_f;
    auto* ingest_cmd =
        app.add_subcommand("ingest", "Validate a cohort and print its shape");
    add_common(ingest_cmd, ingest_f.common, false);
    ingest_cmd->add_option("--waveforms", ingest_f.waveforms,
                           "Waveform manifest CSV")->required();
    ingest_cmd->add_option("--labs", ingest_f.labs, "Lab events CSV")->required();
    ingest_cmd->add_option("--thresholds", ingest_f.thresholds,
                           "Threshold table CSV")->required();
    ingest_cmd->add_option("--rate", ingest_f.rate, "Expected sample rate (Hz)")
        ->capture_default_str();

    SplitFlags split_f;
    auto* split_cmd =
        app.add_subcommand("split", "Partition visits into train/test");
    add_common(split_cmd, split_f.common, true);
    split_cmd->add_option("--waveforms", split_f.waveforms,
                          "Waveform manifest CSV (visit universe)")->required();
    split_cmd->add_option("--ratio", split_f.ratio, "train:test parts")
        ->capture_default_str();

    TrainFlags train_f;
    auto* train_cmd = app.add_subcommand("train", "Fit the classifier");
    add_common(train_cmd, train_f.common, true);
    train_cmd->add_option("--waveforms", train_f.waveforms,
                          "Waveform manifest CSV")->required();
    train_cmd->add_option("--labs", train_f.labs, "Lab events CSV")->required();
    train_cmd->add_option("--thresholds", train_f.thresholds,
                          "Threshold table CSV")->required();
    train_cmd->add_option("--split", train_f.split, "Split manifest CSV")->required();
    train_cmd->add_option("--rate", train_f.rate, "Sample rate (Hz)")
        ->capture_default_str();
    train_cmd->add_option("--window", train_f.window,
                          "Pairing half-width (s)")->capture_default_str();
    train_cmd->add_option("--epochs", train_f.epochs, "Training epochs")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", train_f.batch_size, "Minibatch size")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_f.lr, "Learning rate")
        ->capture_default_str();
    train_cmd->add_option("--kernel", train_f.kernel, "Conv kernel size (odd)")
        ->capture_default_str();
    train_cmd->add_option("--stem-channels", train_f.stem_channels,
                          "Stem conv width")->capture_default_str();
    train_cmd->add_option("--stem-stride", train_f.stem_stride, "Stem stride")
        ->capture_default_str();
    train_cmd->add_option("--channels", train_f.channels,
                          "Residual block widths")->delimiter(',')
        ->capture_default_str();
    train_cmd->add_option("--strides", train_f.strides, "Residual block strides")
        ->delimiter(',')->capture_default_str();

    EvalFlags eval_f;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint per window");
    add_common(eval_cmd, eval_f.common, true);
    eval_cmd->add_option("--waveforms", eval_f.waveforms,
                         "Waveform manifest CSV")->required();
    eval_cmd->add_option("--labs", eval_f.labs, "Lab events CSV")->required();
    eval_cmd->add_option("--thresholds", eval_f.thresholds,
                         "Threshold table CSV")->required();
    eval_cmd->add_option("--split", eval_f.split, "Split manifest CSV")->required();
    eval_cmd->add_option("--model", eval_f.model, "Model checkpoint")->required();
    eval_cmd->add_option("--rate", eval_f.rate, "Sample rate (Hz)")
        ->capture_default_str();
    eval_cmd
        ->add_option("--window", eval_f.windows,
                     "Evaluation half-width seconds (repeatable)")
        ->check(CLI::IsMember({3600, 1800, 900}))
        ->capture_default_str();
    eval_cmd->add_option("--max-test-segments", eval_f.max_test_segments,
                         "Per-event segment cap")->capture_default_str();
    eval_cmd->add_option("--boot", eval_f.boot, "Bootstrap resamples")
        ->capture_default_str();
    eval_cmd->add_option("--batch-size", eval_f.batch_size, "Scoring batch size")
        ->capture_default_str();

    ReportFlags report_f;
    auto* report_cmd =
        app.add_subcommand("report", "Merge report CSVs and stratify by AUC");
    add_common(report_cmd, report_f.common, true);
    report_cmd->add_option("--in", report_f.inputs,
                           "Report CSV from eval (repeatable)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e); // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth_f);
        if (ingest_cmd->parsed()) return run_ingest(ingest_f);
        if (split_cmd->parsed()) return run_split(split_f);
        if (train_cmd->parsed()) return run_train(train_f);
        if (eval_cmd->parsed()) return run_eval(eval_f);
        if (report_cmd->parsed()) return run_report(report_f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
