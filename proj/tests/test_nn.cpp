#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecglab/errors.hpp"
#include "ecglab/loss.hpp"
#include "ecglab/nn.hpp"
#include "ecglab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ecglab;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.input_length = 100;
    cfg.n_classes = 5;
    cfg.kernel_size = 3;
    cfg.stem_channels = 2;
    cfg.stem_stride = 5;
    cfg.channels = {3, 4};
    cfg.strides = {2, 2};
    return cfg;
}

std::vector<float> random_inputs(Rng& rng, std::size_t n, std::size_t len) {
    std::vector<float> x(n * len);
    for (auto& v : x) v = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
    return x;
}

struct ParamEntry {
    std::size_t offset = 0;
    std::vector<std::size_t> shape;
};

// Flat-array offset of every named tensor, rebuilt from the declared shapes.
std::map<std::string, ParamEntry> map_params(const Network& net) {
    std::map<std::string, ParamEntry> m;
    std::size_t off = 0;
    for (const auto& [name, shape] : net.param_shapes()) {
        std::size_t count = 1;
        for (auto d : shape) count *= d;
        m[name] = {off, shape};
        off += count;
    }
    REQUIRE(off == net.param_count());
    return m;
}

// Reference conv with zero padding (kernel-1)/2, written independently of
// the library's blocked implementation. Channel-major layout [ch][time].
std::vector<double> conv_ref(const std::vector<double>& x, std::size_t in_ch,
                             std::size_t in_len, const std::vector<double>& P,
                             const ParamEntry& w, const ParamEntry& b,
                             std::size_t stride) {
    const std::size_t out_ch = w.shape[0];
    const std::size_t kernel = w.shape[2];
    const std::size_t out_len = in_len / stride;
    const auto pad = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
    std::vector<double> y(out_ch * out_len, 0.0);
    for (std::size_t co = 0; co < out_ch; ++co)
        for (std::size_t t = 0; t < out_len; ++t) {
            double acc = P[b.offset + co];
            for (std::size_t ci = 0; ci < in_ch; ++ci)
                for (std::size_t j = 0; j < kernel; ++j) {
                    const auto src =
                        static_cast<std::ptrdiff_t>(t * stride + j) - pad;
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(in_len))
                        continue;
                    acc += P[w.offset + (co * in_ch + ci) * kernel + j] *
                           x[ci * in_len + static_cast<std::size_t>(src)];
                }
            y[co * out_len + t] = acc;
        }
    return y;
}

void relu_ref(std::vector<double>& v) {
    for (auto& x : v)
        if (x < 0.0) x = 0.0;
}

// Whole-network reference forward for one sample, all in double, using the
// float-rounded parameters the production path actually multiplies with.
std::vector<double> forward_ref(const Network& net, const float* sample) {
    const auto& cfg = net.config();
    auto pm = map_params(net);
    std::vector<double> P(net.param_count());
    for (std::size_t i = 0; i < P.size(); ++i)
        P[i] = static_cast<double>(static_cast<float>(net.params()[i]));

    std::vector<double> x(sample, sample + cfg.input_length);
    auto cur = conv_ref(x, 1, cfg.input_length, P, pm.at("stem.w"), pm.at("stem.b"),
                        cfg.stem_stride);
    relu_ref(cur);
    std::size_t ch = cfg.stem_channels;
    std::size_t len = cfg.input_length / cfg.stem_stride;

    for (std::size_t bidx = 0; bidx < cfg.n_blocks(); ++bidx) {
        const std::string base = "block" + std::to_string(bidx);
        const std::size_t out_ch = cfg.channels[bidx];
        const std::size_t stride = cfg.strides[bidx];
        auto a1 = conv_ref(cur, ch, len, P, pm.at(base + ".conv1.w"),
                           pm.at(base + ".conv1.b"), stride);
        relu_ref(a1);
        const std::size_t out_len = len / stride;
        auto y2 = conv_ref(a1, out_ch, out_len, P, pm.at(base + ".conv2.w"),
                           pm.at(base + ".conv2.b"), 1);
        std::vector<double> shortcut;
        if (pm.count(base + ".proj.w")) {
            shortcut = conv_ref(cur, ch, len, P, pm.at(base + ".proj.w"),
                                pm.at(base + ".proj.b"), stride);
        } else {
            shortcut = cur;
        }
        REQUIRE(shortcut.size() == y2.size());
        for (std::size_t i = 0; i < y2.size(); ++i) y2[i] += shortcut[i];
        relu_ref(y2);
        cur = std::move(y2);
        ch = out_ch;
        len = out_len;
    }

    std::vector<double> gap(ch, 0.0);
    for (std::size_t c = 0; c < ch; ++c) {
        double s = 0.0;
        for (std::size_t t = 0; t < len; ++t) s += cur[c * len + t];
        gap[c] = s / static_cast<double>(len);
    }

    const auto& hw = pm.at("head.w");
    const auto& hb = pm.at("head.b");
    std::vector<double> logits(cfg.n_classes, 0.0);
    for (std::size_t o = 0; o < cfg.n_classes; ++o) {
        double acc = P[hb.offset + o];
        for (std::size_t i = 0; i < ch; ++i)
            acc += P[hw.offset + o * ch + i] * gap[i];
        logits[o] = acc;
    }
    return logits;
}

void zero_head(Network& net) {
    auto pm = map_params(net);
    const auto& hw = pm.at("head.w");
    const std::size_t tail = hw.shape[0] * hw.shape[1] + hw.shape[0];
    auto& p = net.params();
    std::fill(p.end() - static_cast<std::ptrdiff_t>(tail), p.end(), 0.0);
    net.sync_params();
}

} // namespace

TEST_CASE("model configuration rejects impossible geometries") {
    auto ok = tiny_config();
    CHECK_NOTHROW(ok.validate());

    auto cfg = ok;
    cfg.kernel_size = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.kernel_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.strides = {2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError); // one stride for two blocks
    cfg = ok;
    cfg.channels.clear();
    cfg.strides.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.input_length = 101; // stem stride 5 does not divide it
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.strides = {2, 3}; // 20 / 2 = 10, then 10 / 3 leaves remainder
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.n_classes = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ok;
    cfg.input_length = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("initialization respects the fan-in bound and zeroes biases") {
    Network net(tiny_config());
    net.init_params(77);
    const auto& p = net.params();
    std::size_t off = 0;
    std::size_t nonzero_weights = 0;
    for (const auto& [name, shape] : net.param_shapes()) {
        std::size_t count = 1;
        for (auto d : shape) count *= d;
        const bool is_bias = shape.size() == 1;
        if (is_bias) {
            for (std::size_t i = 0; i < count; ++i) CHECK(p[off + i] == 0.0);
        } else {
            // fan-in: in_ch * kernel for convs, in_dim for the head
            std::size_t fan_in = 1;
            for (std::size_t d = 1; d < shape.size(); ++d) fan_in *= shape[d];
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t i = 0; i < count; ++i) {
                CAPTURE(name);
                CHECK(std::fabs(p[off + i]) <= bound);
                if (p[off + i] != 0.0) ++nonzero_weights;
            }
        }
        off += count;
    }
    CHECK(nonzero_weights > net.param_count() / 4);
}

TEST_CASE("initialization is a pure function of the seed") {
    Network a(tiny_config()), b(tiny_config()), c(tiny_config());
    a.init_params(123);
    b.init_params(123);
    c.init_params(124);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
}

TEST_CASE("forward is deterministic and per-sample independent") {
    auto cfg = tiny_config();
    Network net(cfg);
    net.init_params(5);
    Rng rng(9);
    auto x = random_inputs(rng, 8, cfg.input_length);

    auto out1 = net.forward(x, 8);
    auto out2 = net.forward(x, 8);
    CHECK(out1.v == out2.v);

    // one row alone computes the identical logits it got inside the batch
    std::vector<float> row(x.begin() + 3 * cfg.input_length,
                           x.begin() + 4 * cfg.input_length);
    auto solo = net.forward(row, 1);
    for (std::size_t j = 0; j < cfg.n_classes; ++j)
        CHECK(solo.at(0, j) == out1.at(3, j));
}

TEST_CASE("a zeroed head maps every input to exactly zero logits") {
    auto cfg = tiny_config();
    Network net(cfg);
    net.init_params(31);
    zero_head(net);
    Rng rng(4);
    auto x = random_inputs(rng, 4, cfg.input_length);
    auto out = net.forward(x, 4);
    for (double l : out.v) CHECK(l == 0.0);
    auto probs = predict(net, x, 4);
    for (double p : probs.v) CHECK(p == 0.5);
}

TEST_CASE("forward agrees with an independent double-precision rewrite") {
    ModelConfig cfg;
    cfg.input_length = 60;
    cfg.n_classes = 7;
    cfg.kernel_size = 5;
    cfg.stem_channels = 4;
    cfg.stem_stride = 3;
    cfg.channels = {4, 6}; // block 0 keeps shape -> identity shortcut
    cfg.strides = {1, 2};
    Network net(cfg);
    net.init_params(2718);

    // make sure the fixture really exercises both shortcut kinds
    auto pm = map_params(net);
    CHECK(pm.count("block0.proj.w") == 0);
    CHECK(pm.count("block1.proj.w") == 1);

    Rng rng(33);
    auto x = random_inputs(rng, 3, cfg.input_length);
    auto got = net.forward(x, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        auto want = forward_ref(net, x.data() + i * cfg.input_length);
        for (std::size_t j = 0; j < cfg.n_classes; ++j) {
            CAPTURE(i);
            CAPTURE(j);
            CHECK(std::fabs(got.at(i, j) - want[j]) <=
                  5e-4 * std::max(1.0, std::fabs(want[j])));
        }
    }
}

TEST_CASE("backward matches finite differences of the batch loss") {
    ModelConfig cfg;
    cfg.input_length = 50;
    cfg.n_classes = 4;
    cfg.kernel_size = 3;
    cfg.stem_channels = 3;
    cfg.stem_stride = 5;
    cfg.channels = {4};
    cfg.strides = {2};
    Network net(cfg);
    net.init_params(17);

    Rng rng(71);
    const std::size_t n = 3;
    auto x = random_inputs(rng, n, cfg.input_length);
    LabelMatrix y(n, cfg.n_classes);
    for (auto& e : y.v) e = static_cast<std::int8_t>(rng.below(3)) - 1;
    y.at(0, 0) = 1; // at least one observed entry
    LossConfig lcfg;

    auto ws = net.make_workspace(n);
    auto logits = net.forward(x, n, &ws);
    auto grad_logits = masked_bce_grad(logits, y, lcfg);
    std::vector<double> grad(net.param_count(), 0.0);
    net.backward(x, n, grad_logits, ws, grad);

    auto loss_at = [&]() { return masked_bce(net.forward(x, n), y, lcfg); };

    const double h = 3e-3;
    std::vector<std::size_t> picks;
    for (std::size_t t = 0; t < 60; ++t) picks.push_back(rng.below(net.param_count()));
    std::sort(picks.begin(), picks.end());
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());

    double num = 0.0, den = 0.0;
    for (std::size_t idx : picks) {
        const double saved = net.params()[idx];
        net.params()[idx] = saved + h;
        net.sync_params();
        const double up = loss_at();
        net.params()[idx] = saved - h;
        net.sync_params();
        const double dn = loss_at();
        net.params()[idx] = saved;
        net.sync_params();
        const double fd = (up - dn) / (2 * h);
        CAPTURE(idx);
        CHECK(std::fabs(grad[idx] - fd) <= 5e-3 + 5e-2 * std::fabs(fd));
        num += (grad[idx] - fd) * (grad[idx] - fd);
        den += fd * fd;
    }
    REQUIRE(den > 0.0); // the sampled coordinates actually move the loss
    CHECK(std::sqrt(num / den) < 0.03);
}

TEST_CASE("thread count never changes forward or backward results") {
#ifdef _OPENMP
    auto cfg = tiny_config();
    Network net(cfg);
    net.init_params(88);
    Rng rng(21);
    const std::size_t n = 7;
    auto x = random_inputs(rng, n, cfg.input_length);
    LabelMatrix y(n, cfg.n_classes, 1);
    LossConfig lcfg;

    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        auto ws = net.make_workspace(n);
        auto logits = net.forward(x, n, &ws);
        auto gl = masked_bce_grad(logits, y, lcfg);
        std::vector<double> grad(net.param_count(), 0.0);
        net.backward(x, n, gl, ws, grad);
        return std::make_pair(logits.v, grad);
    };
    auto one = run(1);
    auto two = run(2);
    omp_set_num_threads(1);
    CHECK(one.first == two.first);
    CHECK(one.second == two.second);
#else
    MESSAGE("built without OpenMP; nothing to compare");
#endif
}

TEST_CASE("predictions are the logistic transform of the logits") {
    auto cfg = tiny_config();
    Network net(cfg);
    net.init_params(61);
    Rng rng(62);
    auto x = random_inputs(rng, 2, cfg.input_length);
    auto logits = net.forward(x, 2);
    auto probs = predict(net, x, 2);
    for (std::size_t i = 0; i < logits.v.size(); ++i) {
        CHECK(probs.v[i] == doctest::Approx(sigmoid(logits.v[i])).epsilon(1e-12));
        CHECK(probs.v[i] > 0.0);
        CHECK(probs.v[i] < 1.0);
    }
}
