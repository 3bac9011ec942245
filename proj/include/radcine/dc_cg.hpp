#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "radcine/encoding.hpp"
#include "radcine/errors.hpp"
#include "radcine/tensor.hpp"

namespace radcine {

struct CgConfig {
    int n_cg = 8;
    std::optional<float> tol;      // test-time stopping on ||r|| <= tol ||b||
    bool record_residuals = false;

    void validate() const {
        if (n_cg < 1) throw std::invalid_argument("CgConfig: n_cg must be >= 1");
        if (tol && !(*tol > 0.f)) throw std::invalid_argument("CgConfig: tol must be > 0");
    }
};

namespace detail {

inline void raw_apply_h(const EncodingOp& op, const float* x, float lambda, float* out, int64_t n) {
    CineImage img(op.nx, op.ny, op.nt);
    std::memcpy(reinterpret_cast<float*>(img.data.data()), x, static_cast<size_t>(n) * sizeof(float));
    CineImage h = apply_H(op, img, lambda);
    std::memcpy(out, reinterpret_cast<const float*>(h.data.data()), static_cast<size_t>(n) * sizeof(float));
}

}  // namespace detail

// Graph node for x -> AH A x + lambda x. H is Hermitian, so its real-valued
// Jacobian is symmetric and the backward pass reapplies H to the incoming
// gradient; the lambda gradient is <grad_out, x>.
inline Tensor apply_h_op(const EncodingOp& op, const Tensor& x, const Tensor& lambda) {
    if (x.ndim() != 4 || x.dim(0) != op.nx || x.dim(1) != op.ny || x.dim(2) != op.nt ||
        x.dim(3) != 2)
        throw std::invalid_argument("apply_h_op: tensor dims mismatch");
    if (lambda.numel() != 1) throw std::invalid_argument("apply_h_op: lambda must be scalar");
    const float lv = lambda.data()[0];
    if (lv < 0.f) throw std::invalid_argument("apply_h_op: lambda must be >= 0");

    Tensor out(x.shape());
    const int64_t n = x.numel();
    detail::raw_apply_h(op, x.data(), lv, out.mutable_data(), n);
    detail::wire(out, {x, lambda}, [&op, x, lambda, n](const std::vector<float>& g) {
        const float lv = lambda.data()[0];
        if (x.requires_grad()) {
            std::vector<float> hg(static_cast<size_t>(n));
            detail::raw_apply_h(op, g.data(), lv, hg.data(), n);
            detail::accum(x, hg.data(), n);
        }
        if (lambda.requires_grad()) {
            double acc = 0.0;
            for (int64_t i = 0; i < n; ++i)
                acc += static_cast<double>(g[static_cast<size_t>(i)]) * x.data()[i];
            lambda.impl()->ensure_grad()[0] += static_cast<float>(acc);
        }
    });
    return out;
}

// Differentiable data-consistency solve: n_cg conjugate-gradient iterations
// on (AH A + lambda I) x = ah_y + lambda x_cnn, warm-started at x_cnn. The
// iterations are recorded on the autodiff graph, so backward yields exact
// gradients of the computed iterate w.r.t. x_cnn, ah_y and lambda. tol-based
// stopping is for inference only (data-dependent iteration counts have no
// well-defined gradient).
inline Tensor solve_dc(const EncodingOp& op, const Tensor& x_cnn, const Tensor& ah_y,
                       const Tensor& lambda, const CgConfig& cfg,
                       std::vector<float>* residuals = nullptr) {
    cfg.validate();
    if (!(lambda.data()[0] > 0.f)) throw std::invalid_argument("solve_dc: lambda must be > 0");
    if (cfg.tol && grad_enabled() && (x_cnn.requires_grad() || lambda.requires_grad()))
        throw std::logic_error("solve_dc: tol-based stopping is not differentiable");

    Tensor b = add(ah_y, scale_by(x_cnn, lambda));
    const float norm_b = std::sqrt(dot(b.detach(), b.detach()).item());
    if (!std::isfinite(norm_b)) throw NumericalError("solve_dc: non-finite right-hand side");

    Tensor x = x_cnn;
    Tensor r = sub(b, apply_h_op(op, x, lambda));
    Tensor p = r;
    Tensor rs = dot(r, r);
    if (residuals && cfg.record_residuals)
        residuals->push_back(std::sqrt(rs.item()) / (norm_b > 0.f ? norm_b : 1.f));

    for (int it = 0; it < cfg.n_cg; ++it) {
        if (rs.item() == 0.f) break;  // converged to float32 exactness
        Tensor hp = apply_h_op(op, p, lambda);
        Tensor php = dot(p, hp);
        if (php.item() == 0.f) break;
        Tensor alpha = div_scalar(rs, php);
        x = add(x, scale_by(p, alpha));
        r = sub(r, scale_by(hp, alpha));
        Tensor rs_new = dot(r, r);
        const float rel = std::sqrt(std::max(rs_new.item(), 0.f)) / (norm_b > 0.f ? norm_b : 1.f);
        if (!std::isfinite(rel)) throw NumericalError("solve_dc: NaN residual (ill-conditioned system)");
        if (residuals && cfg.record_residuals) residuals->push_back(rel);
        if (cfg.tol && rel <= *cfg.tol) break;
        Tensor beta = div_scalar(rs_new, rs);
        p = add(r, scale_by(p, beta));
        rs = rs_new;
    }
    if (!x.all_finite()) throw NumericalError("solve_dc: NaN iterate (ill-conditioned system)");
    return x;
}

// Convenience overload on images (inference path).
inline CineImage solve_dc(const EncodingOp& op, const CineImage& x_cnn, const CineImage& ah_y,
                          float lambda, const CgConfig& cfg,
                          std::vector<float>* residuals = nullptr) {
    NoGradGuard ng;
    Tensor x = solve_dc(op, to_tensor(x_cnn), to_tensor(ah_y), Tensor::scalar(lambda), cfg,
                        residuals);
    return from_tensor(x);
}

}  // namespace radcine
