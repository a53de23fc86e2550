#include "ecglab/train.hpp"

#include "ecglab/csv.hpp"
#include "ecglab/errors.hpp"
#include "ecglab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace ecglab {

namespace {

constexpr char kCheckpointMagic[4] = {'E', 'C', 'G', 'M'};
constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& value) {
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    return is.good();
}

// Sum of per-entry stable-form BCE over unmasked entries plus the mask
// count — the raw ingredients of the loss, so an epoch's mean can be taken
// over the epoch as a whole instead of batch-by-batch.
std::pair<double, double> masked_bce_sum(const Matrix& logits, const LabelMatrix& y) {
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        const std::int8_t e = y.v[i];
        if (e == -1) continue;
        sum += bce_logit(logits.v[i], static_cast<double>(e));
        count += 1.0;
    }
    return {sum, count};
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be finite and non-negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad,
                double lr) {
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        t = 0;
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void fill_batch(const RecordingSet& recordings,
                const std::vector<PairedSample>& pairs, std::size_t first,
                std::size_t count, std::size_t input_length,
                std::vector<float>& out) {
    out.resize(count * input_length);
    // bounds-check serially: an exception may not escape the parallel loop
    for (std::size_t s = 0; s < count; ++s) {
        const auto& p = pairs[first + s];
        const auto& rec = recordings.recordings.at(p.recording_index);
        if (p.offset + input_length > rec.raw.size())
            throw IntegrityError("paired sample points past the end of its recording");
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(count); ++s) {
        const auto& p = pairs[first + static_cast<std::size_t>(s)];
        const auto& rec = recordings.recordings[p.recording_index];
        zscore_into(rec.raw.data() + p.offset, input_length, rec.gain,
                    out.data() + static_cast<std::size_t>(s) * input_length);
    }
}

LabelMatrix fill_labels(const std::vector<BloodTestEvent>& events,
                        const std::vector<PairedSample>& pairs,
                        std::size_t first, std::size_t count,
                        std::size_t n_classes) {
    LabelMatrix y(count, n_classes);
    for (std::size_t s = 0; s < count; ++s) {
        const auto& ev = events.at(pairs[first + s].event_index);
        if (ev.labels.size() != n_classes)
            throw ShapeError("event label vector has " +
                             std::to_string(ev.labels.size()) +
                             " classes, model expects " + std::to_string(n_classes));
        std::memcpy(&y.at(s, 0), ev.labels.data(), n_classes);
    }
    return y;
}

TrainResult train(Network& net, const std::vector<PairedSample>& pairs,
                  const std::vector<BloodTestEvent>& events,
                  const RecordingSet& recordings, const TrainConfig& tcfg,
                  const LossConfig& lcfg,
                  const std::function<void(std::size_t, double)>& on_epoch) {
    tcfg.validate();
    if (pairs.empty()) throw DataError("training set is empty");

    const std::size_t L = net.config().input_length;
    const std::size_t C = net.config().n_classes;
    const std::size_t n = pairs.size();
    const std::size_t bs = tcfg.batch_size;

    net.init_params(tcfg.seed);

    Adam opt;
    auto ws = net.make_workspace(std::min(n, bs));
    std::vector<float> batch;
    std::vector<double> grad(net.param_count(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<PairedSample> shuffled(n);

    TrainResult result;
    result.epoch_loss.reserve(tcfg.epochs);
    for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        Rng rng(derive_seed(tcfg.seed, "shuffle", epoch));
        rng.shuffle(order);
        for (std::size_t i = 0; i < n; ++i) shuffled[i] = pairs[order[i]];

        double epoch_sum = 0.0, epoch_count = 0.0;
        for (std::size_t first = 0; first < n; first += bs) {
            const std::size_t count = std::min(bs, n - first);
            fill_batch(recordings, shuffled, first, count, L, batch);
            LabelMatrix y = fill_labels(events, shuffled, first, count, C);

            Matrix logits = net.forward(batch, count, &ws);
            const auto [sum, valid] = masked_bce_sum(logits, y);
            epoch_sum += sum;
            epoch_count += valid;

            Matrix grad_logits = masked_bce_grad(logits, y, lcfg);
            std::fill(grad.begin(), grad.end(), 0.0);
            net.backward(batch, count, grad_logits, ws, grad);
            opt.step(net.params(), grad, tcfg.learning_rate);
            net.sync_params();
        }
        const double mean = epoch_sum / (epoch_count + lcfg.epsilon);
        result.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return result;
}

namespace {

nlohmann::json model_to_json(const ModelConfig& m) {
    return {{"input_length", m.input_length},
            {"n_classes", m.n_classes},
            {"kernel_size", m.kernel_size},
            {"stem_channels", m.stem_channels},
            {"stem_stride", m.stem_stride},
            {"channels", m.channels},
            {"strides", m.strides}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
    ModelConfig m;
    m.input_length = j.at("input_length").get<std::size_t>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.kernel_size = j.at("kernel_size").get<std::size_t>();
    m.stem_channels = j.at("stem_channels").get<std::size_t>();
    m.stem_stride = j.at("stem_stride").get<std::size_t>();
    m.channels = j.at("channels").get<std::vector<std::size_t>>();
    m.strides = j.at("strides").get<std::vector<std::size_t>>();
    return m;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainConfig& tcfg) {
    nlohmann::json meta;
    meta["model"] = model_to_json(net.config());
    meta["train"] = {{"batch_size", tcfg.batch_size},
                     {"learning_rate", tcfg.learning_rate},
                     {"epochs", tcfg.epochs},
                     {"seed", tcfg.seed}};
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& [name, dims] : net.param_shapes())
        shapes.push_back({{"name", name}, {"shape", dims}});
    meta["shapes"] = std::move(shapes);
    const std::string blob = meta.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create checkpoint " + path.string());
    out.write(kCheckpointMagic, 4);
    write_le(out, kCheckpointVersion);
    write_le(out, static_cast<std::uint32_t>(blob.size()));
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    write_le(out, static_cast<std::uint64_t>(net.param_count()));
    out.write(reinterpret_cast<const char*>(net.params().data()),
              static_cast<std::streamsize>(net.param_count() * sizeof(double)));
    if (!out) throw IoError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic, not a model checkpoint");
    std::uint16_t version = 0;
    std::uint32_t meta_len = 0;
    if (!read_le(in, version) || !read_le(in, meta_len))
        throw FormatError(path.string() + ": truncated header");
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));

    std::string blob(meta_len, '\0');
    in.read(blob.data(), meta_len);
    if (!in) throw FormatError(path.string() + ": truncated metadata");

    Checkpoint ckpt;
    try {
        const auto meta = nlohmann::json::parse(blob);
        ckpt.model = model_from_json(meta.at("model"));
        const auto& t = meta.at("train");
        ckpt.train.batch_size = t.at("batch_size").get<std::size_t>();
        ckpt.train.learning_rate = t.at("learning_rate").get<double>();
        ckpt.train.epochs = t.at("epochs").get<std::size_t>();
        ckpt.train.seed = t.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(path.string() + ": bad checkpoint metadata: " + ex.what());
    }

    std::uint64_t n_params = 0;
    if (!read_le(in, n_params))
        throw FormatError(path.string() + ": truncated parameter count");
    ckpt.params.resize(n_params);
    in.read(reinterpret_cast<char*>(ckpt.params.data()),
            static_cast<std::streamsize>(n_params * sizeof(double)));
    if (static_cast<std::uint64_t>(in.gcount()) != n_params * sizeof(double))
        throw IntegrityError(path.string() + ": header declares " +
                             std::to_string(n_params) +
                             " parameters but body is short");
    char extra;
    if (in.read(&extra, 1))
        throw IntegrityError(path.string() + ": trailing bytes after parameters");
    return ckpt;
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
    Network net(ckpt.model);
    if (net.param_count() != ckpt.params.size())
        throw IntegrityError("checkpoint holds " +
                             std::to_string(ckpt.params.size()) +
                             " parameters but the described architecture needs " +
                             std::to_string(net.param_count()));
    net.params() = ckpt.params;
    net.sync_params();
    return net;
}

void save_loss_trace(const std::filesystem::path& path,
                     const std::vector<double>& epoch_loss) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < epoch_loss.size(); ++i)
        out << i << ',' << format_double(epoch_loss[i]) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace ecglab
