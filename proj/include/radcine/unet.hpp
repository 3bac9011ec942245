#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "radcine/nn.hpp"
#include "radcine/rng.hpp"
#include "radcine/tensor.hpp"

namespace radcine {

// Shared 2D U-Net applied to the spatio-temporal slices. Encoder stages use
// convs_per_stage 3x3 convs with leaky ReLU and 2x max-pooling in between;
// the deepest stage is a single conv; the decoder upsamples bilinearly,
// applies a 3x3 conv with no activation, concatenates the encoder skip and
// merges with convs_per_stage convs. A final 1x1 conv maps back to the
// 2-channel complex representation (no activation).
struct UNetConfig {
    int n_f = 16;
    int stages = 3;
    int convs_per_stage = 2;
    int kernel = 3;
    float leaky_slope = 0.01f;
    int in_channels = 2;
    int out_channels = 2;

    int pool_factor() const { return 1 << (stages - 1); }
};

// All trainable state: named U-Net weights plus the unconstrained
// regularization scalar (lambda = softplus(lambda_raw)).
struct ParamSet {
    UNetConfig cfg;
    std::vector<std::pair<std::string, Tensor>> weights;
    Tensor lambda_raw;

    Tensor& find(const std::string& name) {
        for (auto& [n, t] : weights)
            if (n == name) return t;
        throw std::invalid_argument("ParamSet: no parameter named " + name);
    }
    const Tensor& find(const std::string& name) const {
        return const_cast<ParamSet*>(this)->find(name);
    }

    int64_t weight_count() const {
        int64_t n = 0;
        for (const auto& [name, t] : weights) n += t.numel();
        return n;
    }
    // including lambda_raw
    int64_t param_count() const { return weight_count() + 1; }

    std::vector<Tensor> all_tensors() {
        std::vector<Tensor> out;
        for (auto& [n, t] : weights) out.push_back(t);
        out.push_back(lambda_raw);
        return out;
    }

    void set_requires_grad(bool b) {
        for (auto& [n, t] : weights) t.set_requires_grad(b);
        lambda_raw.set_requires_grad(b);
    }
    void zero_grad() {
        for (auto& [n, t] : weights) t.zero_grad();
        lambda_raw.zero_grad();
    }
};

namespace detail {

inline Tensor init_conv_weight(int f, int c, int k, std::mt19937& rng) {
    Tensor w({f, c, k, k});
    const float bound = 1.f / std::sqrt(static_cast<float>(c * k * k));
    std::uniform_real_distribution<float> d(-bound, bound);
    for (int64_t i = 0; i < w.numel(); ++i) w.mutable_data()[i] = d(rng);
    return w;
}

inline Tensor init_conv_bias(int f, int fan_in, std::mt19937& rng) {
    Tensor b({f});
    const float bound = 1.f / std::sqrt(static_cast<float>(fan_in));
    std::uniform_real_distribution<float> d(-bound, bound);
    for (int64_t i = 0; i < b.numel(); ++i) b.mutable_data()[i] = d(rng);
    return b;
}

inline int stage_channels(const UNetConfig& cfg, int stage) { return cfg.n_f << stage; }

}  // namespace detail

inline ParamSet make_param_set(const UNetConfig& cfg, uint64_t seed) {
    if (cfg.n_f < 1 || cfg.stages < 2 || cfg.convs_per_stage < 1 || cfg.kernel % 2 == 0)
        throw std::invalid_argument("make_param_set: bad config");
    ParamSet ps;
    ps.cfg = cfg;
    std::mt19937 rng = make_rng(seed, 17);

    auto add_conv = [&](const std::string& name, int f, int c, int k) {
        ps.weights.emplace_back(name + ".weight", detail::init_conv_weight(f, c, k, rng));
        ps.weights.emplace_back(name + ".bias", detail::init_conv_bias(f, c * k * k, rng));
    };

    // encoder
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        int in_ch = s == 0 ? cfg.in_channels : detail::stage_channels(cfg, s - 1);
        const int out_ch = detail::stage_channels(cfg, s);
        for (int i = 0; i < cfg.convs_per_stage; ++i) {
            add_conv("enc" + std::to_string(s) + ".conv" + std::to_string(i), out_ch, in_ch,
                     cfg.kernel);
            in_ch = out_ch;
        }
    }
    // bridge (deepest stage, single conv)
    add_conv("bridge.conv0", detail::stage_channels(cfg, cfg.stages - 1),
             detail::stage_channels(cfg, cfg.stages - 2), cfg.kernel);
    // decoder
    for (int s = cfg.stages - 2; s >= 0; --s) {
        const int deep_ch = detail::stage_channels(cfg, s + 1);
        const int out_ch = detail::stage_channels(cfg, s);
        add_conv("up" + std::to_string(s) + ".conv", out_ch, deep_ch, cfg.kernel);
        int in_ch = 2 * out_ch;  // concat with the encoder skip
        for (int i = 0; i < cfg.convs_per_stage; ++i) {
            add_conv("dec" + std::to_string(s) + ".conv" + std::to_string(i), out_ch, in_ch,
                     cfg.kernel);
            in_ch = out_ch;
        }
    }
    add_conv("out", cfg.out_channels, cfg.n_f, 1);

    ps.lambda_raw = Tensor::scalar(0.f);
    return ps;
}

// batch: (B, in_channels, H, W); H and W must be divisible by 2^(stages-1).
inline Tensor unet_forward(const ParamSet& ps, const Tensor& batch) {
    const UNetConfig& cfg = ps.cfg;
    if (batch.ndim() != 4 || batch.dim(1) != cfg.in_channels)
        throw std::invalid_argument("unet_forward: expected (B, in_channels, H, W)");
    if (batch.dim(2) % cfg.pool_factor() != 0 || batch.dim(3) % cfg.pool_factor() != 0)
        throw std::invalid_argument("unet_forward: spatial dims must be divisible by 2^(stages-1)");

    auto conv = [&](const std::string& name, const Tensor& x) {
        return conv2d(x, ps.find(name + ".weight"), ps.find(name + ".bias"));
    };
    auto act = [&](const Tensor& x) { return leaky_relu(x, cfg.leaky_slope); };

    std::vector<Tensor> skips;
    Tensor h = batch;
    for (int s = 0; s + 1 < cfg.stages; ++s) {
        for (int i = 0; i < cfg.convs_per_stage; ++i)
            h = act(conv("enc" + std::to_string(s) + ".conv" + std::to_string(i), h));
        skips.push_back(h);
        h = maxpool2d(h);
    }
    h = act(conv("bridge.conv0", h));
    for (int s = cfg.stages - 2; s >= 0; --s) {
        h = conv("up" + std::to_string(s) + ".conv", upsample_bilinear2x(h));
        h = concat({h, skips[static_cast<size_t>(s)]}, 1);
        for (int i = 0; i < cfg.convs_per_stage; ++i)
            h = act(conv("dec" + std::to_string(s) + ".conv" + std::to_string(i), h));
    }
    return conv("out", h);
}

}  // namespace radcine
