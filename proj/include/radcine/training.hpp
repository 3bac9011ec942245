#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "radcine/cnn_block.hpp"
#include "radcine/simulation.hpp"
#include "radcine/unrolled.hpp"

namespace radcine {

struct TrainConfig {
    enum class Stage { pretrain, finetune };
    Stage stage = Stage::pretrain;
    int epochs = 10;
    float lr = 1e-4f;
    int batch_size = 1;
    uint64_t seed = 0;
    int m_blocks = 1;  // finetune only
    int n_cg = 8;      // finetune only
    int val_every = 1;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (!(lr > 0.f)) throw std::invalid_argument("TrainConfig: lr must be > 0");
        if (batch_size != 1) throw std::invalid_argument("TrainConfig: only batch_size 1 is supported");
    }
};

struct LossRow {
    int64_t step;
    double train_loss;
    double val_loss;  // NaN when not evaluated this row
};

// Mean squared error over the 2-channel real representation.
inline Tensor l2_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "l2_loss");
    Tensor d = sub(pred, target);
    return mean(mul(d, d));
}

inline double l2_loss(const CineImage& pred, const CineImage& target) {
    NoGradGuard ng;
    return l2_loss(to_tensor(pred), to_tensor(target)).item();
}

// Adam with bias correction; state is kept per parameter tensor in the
// ParamSet's ordering (weights then lambda_raw).
struct AdamState {
    std::vector<std::vector<float>> m, v;
    int64_t t = 0;
    float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
};

inline AdamState make_adam_state(ParamSet& ps) {
    AdamState st;
    for (Tensor& p : ps.all_tensors()) {
        st.m.emplace_back(static_cast<size_t>(p.numel()), 0.f);
        st.v.emplace_back(static_cast<size_t>(p.numel()), 0.f);
    }
    return st;
}

inline void adam_step(ParamSet& ps, AdamState& st, float lr) {
    auto tensors = ps.all_tensors();
    if (tensors.size() != st.m.size()) throw std::invalid_argument("adam_step: state mismatch");
    st.t += 1;
    const float bc1 = 1.f - std::pow(st.beta1, static_cast<float>(st.t));
    const float bc2 = 1.f - std::pow(st.beta2, static_cast<float>(st.t));
    for (size_t k = 0; k < tensors.size(); ++k) {
        Tensor& p = tensors[k];
        if (!p.has_grad()) continue;
        const auto& g = p.grad();
        auto& m = st.m[k];
        auto& v = st.v[k];
        float* w = p.mutable_data();
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = st.beta1 * m[i] + (1.f - st.beta1) * g[i];
            v[i] = st.beta2 * v[i] + (1.f - st.beta2) * g[i] * g[i];
            const float mhat = m[i] / bc1;
            const float vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

inline ParamSet clone_params(const ParamSet& ps) {
    ParamSet out;
    out.cfg = ps.cfg;
    for (const auto& [name, t] : ps.weights) out.weights.emplace_back(name, t.detach());
    out.lambda_raw = ps.lambda_raw.detach();
    return out;
}

namespace detail {

inline void check_loss_finite(double loss, int64_t step, const char* stage) {
    if (!std::isfinite(loss))
        throw std::runtime_error(std::string(stage) + ": non-finite loss at step " +
                                 std::to_string(step));
}

}  // namespace detail

// Stage 1: train a single CNN-block on (x_init, ground-truth) pairs. Never
// touches the encoding operator.
inline ParamSet pretrain(const Dataset& ds, const UNetConfig& ucfg, const TrainConfig& cfg,
                         std::vector<LossRow>* log = nullptr) {
    cfg.validate();
    if (ds.train.empty()) throw std::invalid_argument("pretrain: empty dataset");
    ParamSet ps = make_param_set(ucfg, cfg.seed);
    ps.set_requires_grad(true);
    AdamState st = make_adam_state(ps);
    std::mt19937 rng = make_rng(cfg.seed, 21);

    std::vector<Tensor> xs, ts;
    for (const auto& s : ds.train) {
        xs.push_back(to_tensor(s.x_init));
        ts.push_back(to_tensor(s.gt));
    }
    std::vector<Tensor> vx, vt;
    for (const auto& s : ds.val) {
        vx.push_back(to_tensor(s.x_init));
        vt.push_back(to_tensor(s.gt));
    }

    std::vector<size_t> idx(ds.train.size());
    std::iota(idx.begin(), idx.end(), 0);
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double epoch_loss = 0;
        for (size_t i : idx) {
            Tensor loss = l2_loss(block_forward(xs[i], ps), ts[i]);
            detail::check_loss_finite(loss.item(), step, "pretrain");
            epoch_loss += loss.item();
            ps.zero_grad();
            backward(loss);
            adam_step(ps, st, cfg.lr);
            ++step;
        }
        epoch_loss /= static_cast<double>(idx.size());
        double val_loss = std::numeric_limits<double>::quiet_NaN();
        if (!vx.empty() && (epoch % cfg.val_every == 0 || epoch == cfg.epochs - 1)) {
            NoGradGuard ng;
            val_loss = 0;
            for (size_t i = 0; i < vx.size(); ++i)
                val_loss += l2_loss(block_forward(vx[i], ps), vt[i]).item();
            val_loss /= static_cast<double>(vx.size());
        }
        if (log) log->push_back({step, epoch_loss, val_loss});
    }
    return ps;
}

// Stage 2: end-to-end fine-tuning of the unrolled network, lambda included.
// x0 and AH y are sample constants, computed once.
inline ParamSet finetune(const Dataset& ds, const EncodingOp& op, const ParamSet& params0,
                         const TrainConfig& cfg, std::vector<LossRow>* log = nullptr) {
    cfg.validate();
    if (ds.train.empty()) throw std::invalid_argument("finetune: empty dataset");
    ParamSet ps = clone_params(params0);
    ps.set_requires_grad(true);
    AdamState st = make_adam_state(ps);
    std::mt19937 rng = make_rng(cfg.seed, 22);
    CgConfig cg;
    cg.n_cg = cfg.n_cg;

    std::vector<Tensor> x0s, ahs, ts;
    for (const auto& s : ds.train) {
        x0s.push_back(to_tensor(s.x_init));
        ahs.push_back(to_tensor(apply_AH(op, s.y)));
        ts.push_back(to_tensor(s.gt));
    }
    std::vector<Tensor> vx0, vah, vt;
    for (const auto& s : ds.val) {
        vx0.push_back(to_tensor(s.x_init));
        vah.push_back(to_tensor(apply_AH(op, s.y)));
        vt.push_back(to_tensor(s.gt));
    }

    std::vector<size_t> idx(ds.train.size());
    std::iota(idx.begin(), idx.end(), 0);
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double epoch_loss = 0;
        for (size_t i : idx) {
            Tensor pred = reconstruct_graph(op, x0s[i], ahs[i], ps, cfg.m_blocks, cg);
            Tensor loss = l2_loss(pred, ts[i]);
            detail::check_loss_finite(loss.item(), step, "finetune");
            epoch_loss += loss.item();
            ps.zero_grad();
            backward(loss);
            adam_step(ps, st, cfg.lr);
            ++step;
        }
        epoch_loss /= static_cast<double>(idx.size());
        double val_loss = std::numeric_limits<double>::quiet_NaN();
        if (!vx0.empty() && (epoch % cfg.val_every == 0 || epoch == cfg.epochs - 1)) {
            NoGradGuard ng;
            val_loss = 0;
            for (size_t i = 0; i < vx0.size(); ++i) {
                Tensor pred = reconstruct_graph(op, vx0[i], vah[i], ps, cfg.m_blocks, cg);
                val_loss += l2_loss(pred, vt[i]).item();
            }
            val_loss /= static_cast<double>(vx0.size());
        }
        if (log) log->push_back({step, epoch_loss, val_loss});
    }
    return ps;
}

inline void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
    std::vector<std::string> lines;
    for (const auto& r : rows) {
        std::string v = std::isnan(r.val_loss) ? "" : std::to_string(r.val_loss);
        lines.push_back(std::to_string(r.step) + "," + std::to_string(r.train_loss) + "," + v);
    }
    io::write_csv(path, "step,train_loss,val_loss", lines);
}

}  // namespace radcine
