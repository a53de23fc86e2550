#include "ecglab/nn.hpp"

#include "ecglab/errors.hpp"
#include "ecglab/loss.hpp"
#include "ecglab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace ecglab {

void ModelConfig::validate() const {
    if (n_classes < 1) throw ConfigError("n_classes must be >= 1");
    if (input_length < 1) throw ConfigError("input_length must be >= 1");
    if (kernel_size == 0 || kernel_size % 2 == 0)
        throw ConfigError("kernel_size must be odd, got " +
                          std::to_string(kernel_size));
    if (channels.empty())
        throw ConfigError("at least one residual block is required");
    if (channels.size() != strides.size())
        throw ConfigError("channels (" + std::to_string(channels.size()) +
                          ") and strides (" + std::to_string(strides.size()) +
                          ") must have one entry per block");
    if (stem_channels < 1 || stem_stride < 1)
        throw ConfigError("stem_channels and stem_stride must be >= 1");

    std::size_t len = input_length;
    if (len % stem_stride != 0)
        throw ConfigError("input_length " + std::to_string(len) +
                          " is not divisible by stem stride " +
                          std::to_string(stem_stride));
    len /= stem_stride;
    for (std::size_t b = 0; b < channels.size(); ++b) {
        if (channels[b] < 1 || strides[b] < 1)
            throw ConfigError("block " + std::to_string(b) +
                              ": channels and stride must be >= 1");
        if (len % strides[b] != 0)
            throw ConfigError("length " + std::to_string(len) + " entering block " +
                              std::to_string(b) + " is not divisible by stride " +
                              std::to_string(strides[b]));
        len /= strides[b];
    }
    if (len == 0) throw ConfigError("stride chain downsamples the input away");
}

Network::Network(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();

    std::size_t off = 0;
    auto add_conv = [&off](std::size_t in_ch, std::size_t out_ch, std::size_t k,
                           std::size_t stride, std::size_t in_len) {
        ConvSpec c;
        c.in_ch = in_ch;
        c.out_ch = out_ch;
        c.kernel = k;
        c.stride = stride;
        c.in_len = in_len;
        c.out_len = in_len / stride;
        c.w_off = off;
        off += out_ch * in_ch * k;
        c.b_off = off;
        off += out_ch;
        return c;
    };

    stem_ = add_conv(1, cfg_.stem_channels, cfg_.kernel_size, cfg_.stem_stride,
                     cfg_.input_length);
    std::size_t ch = cfg_.stem_channels;
    std::size_t len = stem_.out_len;
    for (std::size_t b = 0; b < cfg_.n_blocks(); ++b) {
        BlockSpec blk;
        blk.conv1 = add_conv(ch, cfg_.channels[b], cfg_.kernel_size,
                             cfg_.strides[b], len);
        blk.conv2 = add_conv(cfg_.channels[b], cfg_.channels[b], cfg_.kernel_size,
                             1, blk.conv1.out_len);
        blk.has_projection = cfg_.strides[b] != 1 || ch != cfg_.channels[b];
        if (blk.has_projection)
            blk.proj = add_conv(ch, cfg_.channels[b], 1, cfg_.strides[b], len);
        blocks_.push_back(blk);
        ch = cfg_.channels[b];
        len = blk.conv1.out_len;
    }
    head_.in_dim = ch;
    head_.out_dim = cfg_.n_classes;
    head_.w_off = off;
    off += head_.out_dim * head_.in_dim;
    head_.b_off = off;
    off += head_.out_dim;
    n_params_ = off;
    params_.assign(n_params_, 0.0);
    params_f_.assign(n_params_, 0.0f);

    // Per-sample activation arena: stem output, each block's first-conv
    // output and block output, and the pooled feature vector.
    std::size_t a = 0;
    stem_off_ = a;
    a += stem_.out_ch * stem_.out_len;
    for (const auto& blk : blocks_) {
        a1_off_.push_back(a);
        a += blk.conv1.out_ch * blk.conv1.out_len;
        y_off_.push_back(a);
        a += blk.conv2.out_ch * blk.conv2.out_len;
    }
    gap_off_ = a;
    a += head_.in_dim;
    acts_per_sample_ = a;
}

void Network::sync_params() {
    for (std::size_t i = 0; i < n_params_; ++i)
        params_f_[i] = static_cast<float>(params_[i]);
}

void Network::init_params(std::uint64_t seed) {
    std::fill(params_.begin(), params_.end(), 0.0);
    Rng rng(derive_seed(seed, "init"));
    auto fill_conv = [&](const ConvSpec& c) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(c.in_ch * c.kernel));
        const std::size_t n = c.out_ch * c.in_ch * c.kernel;
        for (std::size_t i = 0; i < n; ++i)
            params_[c.w_off + i] = rng.uniform(-bound, bound);
    };
    fill_conv(stem_);
    for (const auto& blk : blocks_) {
        fill_conv(blk.conv1);
        fill_conv(blk.conv2);
        if (blk.has_projection) fill_conv(blk.proj);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(head_.in_dim));
    for (std::size_t i = 0; i < head_.out_dim * head_.in_dim; ++i)
        params_[head_.w_off + i] = rng.uniform(-bound, bound);
    sync_params();
}

std::vector<std::pair<std::string, std::vector<std::size_t>>>
Network::param_shapes() const {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes;
    auto add_conv = [&shapes](const std::string& name, const ConvSpec& c) {
        shapes.push_back({name + ".w", {c.out_ch, c.in_ch, c.kernel}});
        shapes.push_back({name + ".b", {c.out_ch}});
    };
    add_conv("stem", stem_);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const std::string base = "block" + std::to_string(b);
        add_conv(base + ".conv1", blocks_[b].conv1);
        add_conv(base + ".conv2", blocks_[b].conv2);
        if (blocks_[b].has_projection) add_conv(base + ".proj", blocks_[b].proj);
    }
    shapes.push_back({"head.w", {head_.out_dim, head_.in_dim}});
    shapes.push_back({"head.b", {head_.out_dim}});
    return shapes;
}

Network::Workspace Network::make_workspace(std::size_t max_batch) const {
    Workspace ws;
    ws.capacity = max_batch;
    ws.acts.assign(max_batch * acts_per_sample_, 0.0f);
    ws.sample_grads.assign(max_batch * n_params_, 0.0f);
    return ws;
}

namespace {

// y[co][t] = bias[co] + sum over ci, j of W[co][ci][j] * x[ci][t*stride+j-pad]
// with zero padding of (kernel-1)/2 on both ends.
void conv_forward(const ConvSpec& c, const float* P, const float* x, float* y,
                  bool relu) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((c.kernel - 1) / 2);
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(c.kernel);
    const std::ptrdiff_t in_len = static_cast<std::ptrdiff_t>(c.in_len);
    for (std::size_t co = 0; co < c.out_ch; ++co) {
        const float* Wc = P + c.w_off + co * c.in_ch * c.kernel;
        const float bias = P[c.b_off + co];
        float* yo = y + co * c.out_len;
        for (std::size_t t = 0; t < c.out_len; ++t) {
            const std::ptrdiff_t base =
                static_cast<std::ptrdiff_t>(t * c.stride) - pad;
            const std::ptrdiff_t lo = base < 0 ? -base : 0;
            const std::ptrdiff_t hi = std::min(k, in_len - base);
            float acc = bias;
            for (std::size_t ci = 0; ci < c.in_ch; ++ci) {
                const float* xc = x + ci * c.in_len + base;
                const float* wr = Wc + ci * c.kernel;
                for (std::ptrdiff_t j = lo; j < hi; ++j) acc += wr[j] * xc[j];
            }
            yo[t] = (relu && acc < 0.0f) ? 0.0f : acc;
        }
    }
}

// Given upstream dy, adds weight/bias gradients into gbuf and (optionally)
// the input gradient into dx.
void conv_backward(const ConvSpec& c, const float* P, const float* x,
                   const float* dy, float* gbuf, float* dx) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((c.kernel - 1) / 2);
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(c.kernel);
    const std::ptrdiff_t in_len = static_cast<std::ptrdiff_t>(c.in_len);
    for (std::size_t co = 0; co < c.out_ch; ++co) {
        const float* Wc = P + c.w_off + co * c.in_ch * c.kernel;
        float* dWc = gbuf + c.w_off + co * c.in_ch * c.kernel;
        const float* dyo = dy + co * c.out_len;
        float db = 0.0f;
        for (std::size_t t = 0; t < c.out_len; ++t) {
            const float g = dyo[t];
            if (g == 0.0f) continue;
            db += g;
            const std::ptrdiff_t base =
                static_cast<std::ptrdiff_t>(t * c.stride) - pad;
            const std::ptrdiff_t lo = base < 0 ? -base : 0;
            const std::ptrdiff_t hi = std::min(k, in_len - base);
            for (std::size_t ci = 0; ci < c.in_ch; ++ci) {
                const float* xc = x + ci * c.in_len + base;
                float* dWr = dWc + ci * c.kernel;
                for (std::ptrdiff_t j = lo; j < hi; ++j) dWr[j] += g * xc[j];
                if (dx) {
                    float* dxc = dx + ci * c.in_len + base;
                    const float* wr = Wc + ci * c.kernel;
                    for (std::ptrdiff_t j = lo; j < hi; ++j) dxc[j] += g * wr[j];
                }
            }
        }
        gbuf[c.b_off + co] += db;
    }
}

} // namespace

void Network::forward_sample(const float* x, float* acts, double* logits_row) const {
    const float* P = params_f_.data();
    conv_forward(stem_, P, x, acts + stem_off_, true);

    const float* cur = acts + stem_off_;
    std::vector<float> proj_out;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        float* a1 = acts + a1_off_[b];
        float* y = acts + y_off_[b];
        const std::size_t ysz = blk.conv2.out_ch * blk.conv2.out_len;

        conv_forward(blk.conv1, P, cur, a1, true);
        conv_forward(blk.conv2, P, a1, y, false);
        if (blk.has_projection) {
            proj_out.assign(ysz, 0.0f);
            conv_forward(blk.proj, P, cur, proj_out.data(), false);
            for (std::size_t i = 0; i < ysz; ++i) y[i] += proj_out[i];
        } else {
            for (std::size_t i = 0; i < ysz; ++i) y[i] += cur[i];
        }
        for (std::size_t i = 0; i < ysz; ++i)
            if (y[i] < 0.0f) y[i] = 0.0f;
        cur = y;
    }

    // Global average pooling over time.
    const auto& last = blocks_.back().conv2;
    float* g = acts + gap_off_;
    for (std::size_t c = 0; c < last.out_ch; ++c) {
        double s = 0.0;
        const float* yc = cur + c * last.out_len;
        for (std::size_t t = 0; t < last.out_len; ++t) s += yc[t];
        g[c] = static_cast<float>(s / static_cast<double>(last.out_len));
    }

    const float* P2 = params_f_.data();
    for (std::size_t o = 0; o < head_.out_dim; ++o) {
        double acc = P2[head_.b_off + o];
        const float* wr = P2 + head_.w_off + o * head_.in_dim;
        for (std::size_t c = 0; c < head_.in_dim; ++c) acc += double(wr[c]) * g[c];
        logits_row[o] = acc;
    }
}

Matrix Network::forward(const std::vector<float>& inputs, std::size_t n,
                        Workspace* ws) const {
    if (inputs.size() != n * cfg_.input_length)
        throw ShapeError("batch holds " + std::to_string(inputs.size()) +
                         " samples' worth of data but n*input_length is " +
                         std::to_string(n * cfg_.input_length));
    if (ws && ws->capacity < n) *ws = make_workspace(n);

    Matrix logits(n, cfg_.n_classes);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
        std::vector<float> local;
        float* acts;
        if (ws) {
            acts = ws->acts.data() + static_cast<std::size_t>(s) * acts_per_sample_;
        } else {
            local.assign(acts_per_sample_, 0.0f);
            acts = local.data();
        }
        forward_sample(inputs.data() + static_cast<std::size_t>(s) * cfg_.input_length,
                       acts, logits.v.data() + static_cast<std::size_t>(s) * cfg_.n_classes);
    }
    return logits;
}

void Network::backward_sample(const float* x, const float* acts,
                              const double* grad_logits_row, float* gbuf) const {
    bool any = false;
    for (std::size_t o = 0; o < head_.out_dim; ++o)
        if (grad_logits_row[o] != 0.0) { any = true; break; }
    if (!any) return; // fully masked sample: gradient is exactly zero

    const float* P = params_f_.data();
    const float* g = acts + gap_off_;

    std::vector<float> dg(head_.in_dim, 0.0f);
    for (std::size_t o = 0; o < head_.out_dim; ++o) {
        const float dl = static_cast<float>(grad_logits_row[o]);
        if (dl == 0.0f) continue;
        gbuf[head_.b_off + o] += dl;
        float* dWr = gbuf + head_.w_off + o * head_.in_dim;
        const float* wr = P + head_.w_off + o * head_.in_dim;
        for (std::size_t c = 0; c < head_.in_dim; ++c) {
            dWr[c] += dl * g[c];
            dg[c] += dl * wr[c];
        }
    }

    // One scratch buffer per role, each big enough for the largest stage.
    std::size_t max_stage = stem_.out_ch * stem_.out_len;
    for (const auto& blk : blocks_) {
        max_stage = std::max(max_stage, blk.conv1.out_ch * blk.conv1.out_len);
        max_stage = std::max(max_stage, blk.conv2.out_ch * blk.conv2.out_len);
    }
    std::vector<float> dcur(max_stage, 0.0f), dnext(max_stage, 0.0f),
        dsum(max_stage, 0.0f), da1(max_stage, 0.0f);

    // Pooling backward: each time step shares the channel mean's gradient.
    const auto& last = blocks_.back().conv2;
    const float inv_t = 1.0f / static_cast<float>(last.out_len);
    for (std::size_t c = 0; c < last.out_ch; ++c)
        for (std::size_t t = 0; t < last.out_len; ++t)
            dcur[c * last.out_len + t] = dg[c] * inv_t;

    for (std::size_t b = blocks_.size(); b-- > 0;) {
        const auto& blk = blocks_[b];
        const float* x_b = b == 0 ? acts + stem_off_ : acts + y_off_[b - 1];
        const float* a1 = acts + a1_off_[b];
        const float* y = acts + y_off_[b];
        const std::size_t ysz = blk.conv2.out_ch * blk.conv2.out_len;
        const std::size_t xsz = blk.conv1.in_ch * blk.conv1.in_len;

        for (std::size_t i = 0; i < ysz; ++i)
            dsum[i] = y[i] > 0.0f ? dcur[i] : 0.0f;

        std::fill(da1.begin(), da1.begin() + blk.conv2.in_ch * blk.conv2.in_len, 0.0f);
        conv_backward(blk.conv2, P, a1, dsum.data(), gbuf, da1.data());
        for (std::size_t i = 0; i < blk.conv1.out_ch * blk.conv1.out_len; ++i)
            if (a1[i] <= 0.0f) da1[i] = 0.0f;

        std::fill(dnext.begin(), dnext.begin() + xsz, 0.0f);
        conv_backward(blk.conv1, P, x_b, da1.data(), gbuf, dnext.data());
        if (blk.has_projection) {
            conv_backward(blk.proj, P, x_b, dsum.data(), gbuf, dnext.data());
        } else {
            for (std::size_t i = 0; i < ysz; ++i) dnext[i] += dsum[i];
        }
        std::swap(dcur, dnext);
    }

    const float* s_out = acts + stem_off_;
    const std::size_t ssz = stem_.out_ch * stem_.out_len;
    for (std::size_t i = 0; i < ssz; ++i)
        dsum[i] = s_out[i] > 0.0f ? dcur[i] : 0.0f;
    conv_backward(stem_, P, x, dsum.data(), gbuf, nullptr);
}

void Network::backward(const std::vector<float>& inputs, std::size_t n,
                       const Matrix& grad_logits, Workspace& ws,
                       std::vector<double>& grad_accum) const {
    if (grad_logits.rows != n || grad_logits.cols != cfg_.n_classes)
        throw ShapeError("logit gradient is " + std::to_string(grad_logits.rows) +
                         "x" + std::to_string(grad_logits.cols) + ", expected " +
                         std::to_string(n) + "x" + std::to_string(cfg_.n_classes));
    if (inputs.size() != n * cfg_.input_length)
        throw ShapeError("input batch size does not match n*input_length");
    if (ws.capacity < n)
        throw ShapeError("workspace was not filled by a matching forward pass");
    if (grad_accum.size() != n_params_) grad_accum.assign(n_params_, 0.0);

    std::fill(ws.sample_grads.begin(),
              ws.sample_grads.begin() + n * n_params_, 0.0f);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
        const std::size_t i = static_cast<std::size_t>(s);
        backward_sample(inputs.data() + i * cfg_.input_length,
                        ws.acts.data() + i * acts_per_sample_,
                        grad_logits.v.data() + i * cfg_.n_classes,
                        ws.sample_grads.data() + i * n_params_);
    }

    // Fixed-order reduction: sample 0 first, always — the batch gradient is
    // bitwise identical no matter how many threads ran the loop above.
    for (std::size_t s = 0; s < n; ++s) {
        const float* gbuf = ws.sample_grads.data() + s * n_params_;
        for (std::size_t j = 0; j < n_params_; ++j)
            grad_accum[j] += static_cast<double>(gbuf[j]);
    }
}

Matrix predict(const Network& net, const std::vector<float>& inputs, std::size_t n) {
    Matrix probs = net.forward(inputs, n);
    for (double& v : probs.v) v = sigmoid(v);
    return probs;
}

} // namespace ecglab
