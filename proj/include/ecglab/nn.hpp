#pragma once

#include "ecglab/matrix.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ecglab {

// Compact 1-D residual convolutional multi-label classifier: stem conv,
// a stack of two-conv residual blocks, global average pooling, linear head.
// No normalization layers — every sample's logits depend only on that
// sample, so batch composition can never change a prediction.
struct ModelConfig {
    std::size_t input_length = 5000; // samples per segment (10 s at 500 Hz)
    std::size_t n_classes = 108;
    std::size_t kernel_size = 7; // odd
    std::size_t stem_channels = 16;
    std::size_t stem_stride = 5;
    std::vector<std::size_t> channels = {24, 32, 48}; // one per residual block
    std::vector<std::size_t> strides = {2, 2, 2};     // one per residual block

    std::size_t n_blocks() const { return channels.size(); }

    // Throws ConfigError unless kernel is odd, widths/strides line up, and
    // input_length survives the stride chain without remainder.
    void validate() const;
};

// One convolution's geometry plus where its weights live in the flat
// parameter array. Weight layout is [out_ch][in_ch][kernel].
struct ConvSpec {
    std::size_t in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
    std::size_t in_len = 0, out_len = 0;
    std::size_t w_off = 0, b_off = 0;
};

struct BlockSpec {
    ConvSpec conv1; // strided
    ConvSpec conv2; // stride 1
    bool has_projection = false;
    ConvSpec proj; // 1x1 shortcut when shape changes
};

struct LinearSpec {
    std::size_t in_dim = 0, out_dim = 0;
    std::size_t w_off = 0, b_off = 0;
};

class Network {
public:
    explicit Network(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    std::size_t param_count() const { return n_params_; }

    // Master parameters (double). Mutate then call sync_params() so the
    // float working copy used by forward/backward matches.
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    void sync_params();

    // Weights fan-in-scaled uniform from a stream derived off `seed`;
    // biases zero.
    void init_params(std::uint64_t seed);

    // (name, shape) per parameter tensor, in flat-array order.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> param_shapes() const;

    // Scratch for training: cached activations plus per-sample gradient
    // buffers. Reducing those buffers in sample order makes the batch
    // gradient bitwise independent of how many threads ran the samples.
    struct Workspace {
        std::size_t capacity = 0;
        std::vector<float> acts;
        std::vector<float> sample_grads;
    };
    Workspace make_workspace(std::size_t max_batch) const;

    // inputs: n rows of input_length floats, row-major. Returns n x C
    // logits. Pass a workspace to cache activations for backward().
    Matrix forward(const std::vector<float>& inputs, std::size_t n,
                   Workspace* ws = nullptr) const;

    // Adds this batch's parameter gradient (d loss / d param, given
    // d loss / d logits) into grad_accum. Requires the workspace filled by
    // the matching forward() call on the same inputs.
    void backward(const std::vector<float>& inputs, std::size_t n,
                  const Matrix& grad_logits, Workspace& ws,
                  std::vector<double>& grad_accum) const;

private:
    ModelConfig cfg_;
    ConvSpec stem_;
    std::vector<BlockSpec> blocks_;
    LinearSpec head_;
    std::size_t n_params_ = 0;

    // Per-sample activation arena offsets.
    std::size_t acts_per_sample_ = 0;
    std::size_t stem_off_ = 0;
    std::vector<std::size_t> a1_off_, y_off_;
    std::size_t gap_off_ = 0;

    std::vector<double> params_;
    std::vector<float> params_f_;

    void forward_sample(const float* x, float* acts, double* logits_row) const;
    void backward_sample(const float* x, const float* acts,
                         const double* grad_logits_row, float* gbuf) const;
};

// sigma(logits): n x C probabilities.
Matrix predict(const Network& net, const std::vector<float>& inputs, std::size_t n);

} // namespace ecglab
