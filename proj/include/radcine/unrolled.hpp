#pragma once

#include "radcine/cnn_block.hpp"
#include "radcine/dc_cg.hpp"
#include "radcine/encoding.hpp"

namespace radcine {

// lambda = softplus(lambda_raw), strictly positive for every float input.
inline float lambda_of(const ParamSet& params) {
    const float v = params.lambda_raw.item();
    return v > 20.f ? v : std::log1p(std::exp(std::min(v, 20.f)));
}

inline Tensor lambda_tensor(const ParamSet& params) { return softplus(params.lambda_raw); }

struct ReconstructOptions {
    bool identity_cnn = false;  // bypass the U-Net (block becomes the identity)
};

// One pass of the unrolled network on the graph: x0 and ah_y are tensors so
// gradients flow end-to-end; the same parameter set is used in every block.
inline Tensor reconstruct_graph(const EncodingOp& op, const Tensor& x0, const Tensor& ah_y,
                                const ParamSet& params, int m_blocks, const CgConfig& cfg,
                                const ReconstructOptions& opts = {}) {
    if (m_blocks < 1) throw std::invalid_argument("reconstruct: M must be >= 1");
    Tensor lam = lambda_tensor(params);
    Tensor x = x0;
    for (int m = 0; m < m_blocks; ++m) {
        Tensor x_cnn = opts.identity_cnn ? x : block_forward(x, params);
        x = solve_dc(op, x_cnn, ah_y, lam, cfg);
    }
    return x;
}

// Inference entry point: x0 = A# y, AH y computed once and reused in every
// DC block; no graph is retained.
inline CineImage reconstruct(const EncodingOp& op, const KSpaceData& y, const ParamSet& params,
                             int m_blocks, const CgConfig& cfg,
                             const ReconstructOptions& opts = {},
                             std::vector<float>* residuals = nullptr) {
    if (m_blocks < 1) throw std::invalid_argument("reconstruct: M must be >= 1");
    NoGradGuard ng;
    CineImage x0 = apply_A_sharp(op, y);
    CineImage ah_y = apply_AH(op, y);
    Tensor lam = lambda_tensor(params);
    Tensor x = to_tensor(x0);
    Tensor ah = to_tensor(ah_y);
    for (int m = 0; m < m_blocks; ++m) {
        Tensor x_cnn = opts.identity_cnn ? x : block_forward(x, params);
        x = solve_dc(op, x_cnn, ah, lam, cfg, residuals);
    }
    return from_tensor(x);
}

}  // namespace radcine
