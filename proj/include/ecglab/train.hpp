#pragma once

#include "ecglab/labels.hpp"
#include "ecglab/loss.hpp"
#include "ecglab/nn.hpp"
#include "ecglab/split.hpp"
#include "ecglab/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace ecglab {

struct TrainConfig {
    std::size_t batch_size = 256;
    double learning_rate = 1e-4;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;

    void validate() const; // all positive
};

// Adaptive moment estimation with bias correction.
struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    std::size_t t = 0;

    void step(std::vector<double>& params, const std::vector<double>& grad,
              double lr);
};

struct TrainResult {
    // Mean masked BCE across each epoch: total per-entry loss over all valid
    // labels seen that epoch, divided by (valid count + epsilon). Computed
    // over the whole epoch rather than averaged per batch, so the trace does
    // not depend on how the shuffle happened to partition the batches.
    std::vector<double> epoch_loss;
};

// Materializes pairs[first .. first+count) as z-scored float rows.
void fill_batch(const RecordingSet& recordings,
                const std::vector<PairedSample>& pairs, std::size_t first,
                std::size_t count, std::size_t input_length,
                std::vector<float>& out);

// Label rows for the same slice of pairs.
LabelMatrix fill_labels(const std::vector<BloodTestEvent>& events,
                        const std::vector<PairedSample>& pairs,
                        std::size_t first, std::size_t count,
                        std::size_t n_classes);

// Initializes the network from tcfg.seed and runs minibatch training with
// the masked BCE loss: per-epoch shuffle, Adam updates, loss trace out.
TrainResult train(Network& net, const std::vector<PairedSample>& pairs,
                  const std::vector<BloodTestEvent>& events,
                  const RecordingSet& recordings, const TrainConfig& tcfg,
                  const LossConfig& lcfg,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

// Checkpoint: versioned binary holding the model/train configs, seed, named
// parameter shapes, and the flat double parameter array.
struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    std::vector<double> params;
};

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainConfig& tcfg);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Restores a network (architecture + weights) from a checkpoint.
Network network_from_checkpoint(const Checkpoint& ckpt);

// Loss trace CSV: epoch, mean_loss.
void save_loss_trace(const std::filesystem::path& path,
                     const std::vector<double>& epoch_loss);

} // namespace ecglab
