#pragma once

#include <functional>

#include "radcine/encoding.hpp"
#include "radcine/tensor.hpp"
#include "radcine/tensor_fft.hpp"
#include "radcine/unet.hpp"

namespace radcine {

// Temporal average replicated along t: (nx, ny, nt, 2) -> same shape.
inline Tensor temporal_mean_stack(const Tensor& x) {
    if (x.ndim() != 4 || x.shape()[3] != 2)
        throw std::invalid_argument("temporal_mean_stack: expected (nx, ny, nt, 2)");
    return broadcast_axis(reduce_mean_axis(x, 2), 2, x.dim(2));
}

// Rotations into spatio-temporal slice stacks:
//   xt: (ny, 2, nx, nt)  -- one 2D image per y position
//   yt: (nx, 2, ny, nt)  -- one 2D image per x position
inline Tensor to_xt(const Tensor& z) { return permute(z, {1, 3, 0, 2}); }
inline Tensor to_yt(const Tensor& z) { return permute(z, {0, 3, 1, 2}); }
inline Tensor from_xt(const Tensor& s) { return permute(s, {2, 0, 3, 1}); }
inline Tensor from_yt(const Tensor& s) { return permute(s, {0, 2, 3, 1}); }

using SliceFn = std::function<Tensor(const Tensor&)>;

// The regularizing block around an arbitrary slice processor:
//   x_cnn = Ft^H [ 1/2 (Rxt^T f(Rxt Ft(x - mu)) + Ryt^T f(Ryt Ft(x - mu))) ] + mu
// The 1/2 accounts for every pixel appearing in both branches.
inline Tensor block_forward_with(const Tensor& x, const SliceFn& fn) {
    Tensor mu = temporal_mean_stack(x);
    Tensor z = fft_1d(sub(x, mu), false);
    Tensor zxt = from_xt(fn(to_xt(z)));
    Tensor zyt = from_yt(fn(to_yt(z)));
    Tensor z_cnn = scale(add(zxt, zyt), 0.5f);
    return add(fft_1d(z_cnn, true), mu);
}

// The learned block: the same U-Net (shared weights) processes both branches.
inline Tensor block_forward(const Tensor& x, const ParamSet& params) {
    return block_forward_with(x, [&](const Tensor& s) { return unet_forward(params, s); });
}

inline CineImage block_forward(const CineImage& x, const ParamSet& params) {
    NoGradGuard ng;
    return from_tensor(block_forward(to_tensor(x), params));
}

}  // namespace radcine
