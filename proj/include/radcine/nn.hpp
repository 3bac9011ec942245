#pragma once

#include "radcine/parallel.hpp"
#include "radcine/tensor.hpp"

namespace radcine {

namespace detail {

// SIMD-reduced float dot / sum for the conv kernels. The pragma licenses
// the reduction reorder for these loops only; results are deterministic for
// a given build.
inline float lane_dot(const float* a, const float* b, int64_t n) {
    float acc = 0.f;
#pragma omp simd reduction(+ : acc)
    for (int64_t p = 0; p < n; ++p) acc += a[p] * b[p];
    return acc;
}

inline float lane_sum(const float* a, int64_t n) {
    float acc = 0.f;
#pragma omp simd reduction(+ : acc)
    for (int64_t p = 0; p < n; ++p) acc += a[p];
    return acc;
}

// y += c * x, explicitly vectorized
inline void lane_axpy(float c, const float* x, float* y, int64_t n) {
#pragma omp simd
    for (int64_t p = 0; p < n; ++p) y[p] += c * x[p];
}

// per-thread scratch reused across conv calls
inline std::vector<float>& conv_scratch(int slot) {
    thread_local std::vector<float> bufs[2];
    return bufs[slot];
}

// im2col for one batch item: input (C,H,W) -> col (C*k*k, Ho*Wo).
inline void im2col(const float* in, int C, int H, int W, int k, int stride, int pad, int Ho,
                   int Wo, float* col) {
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col + ((static_cast<int64_t>(c) * k + ky) * k + kx) * Ho * Wo;
                for (int y = 0; y < Ho; ++y) {
                    const int iy = y * stride + ky - pad;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst + static_cast<int64_t>(y) * Wo, dst + static_cast<int64_t>(y + 1) * Wo, 0.f);
                        continue;
                    }
                    const float* src = in + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int x = 0; x < Wo; ++x) {
                        const int ix = x * stride + kx - pad;
                        dst[static_cast<int64_t>(y) * Wo + x] = (ix >= 0 && ix < W) ? src[ix] : 0.f;
                    }
                }
            }
        }
    }
}

inline void col2im(const float* col, int C, int H, int W, int k, int stride, int pad, int Ho,
                   int Wo, float* in_grad) {
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = col + ((static_cast<int64_t>(c) * k + ky) * k + kx) * Ho * Wo;
                for (int y = 0; y < Ho; ++y) {
                    const int iy = y * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    float* dst = in_grad + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int x = 0; x < Wo; ++x) {
                        const int ix = x * stride + kx - pad;
                        if (ix >= 0 && ix < W) dst[ix] += src[static_cast<int64_t>(y) * Wo + x];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// 2D cross-correlation, input (B,C,H,W), weight (F,C,k,k), bias (F).
inline Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1,
                     int padding = -1) {
    if (input.ndim() != 4 || weight.ndim() != 4)
        throw std::invalid_argument("conv2d: input and weight must be 4-d");
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int F = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != C) throw std::invalid_argument("conv2d: channel mismatch");
    if (weight.dim(3) != k || (k % 2) == 0) throw std::invalid_argument("conv2d: kernel must be square and odd");
    if (bias.numel() != F) throw std::invalid_argument("conv2d: bias size mismatch");
    if (padding < 0) padding = (k - 1) / 2;
    if (stride < 1) throw std::invalid_argument("conv2d: bad stride");
    const int Ho = (H + 2 * padding - k) / stride + 1;
    const int Wo = (W + 2 * padding - k) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: non-positive output dims");

    Tensor out({B, F, Ho, Wo});
    const int K = C * k * k;
    const int64_t P = static_cast<int64_t>(Ho) * Wo;

    parallel_for(B, [&](int64_t b) {
        auto& col = detail::conv_scratch(0);
        col.resize(static_cast<size_t>(K) * P);
        detail::im2col(input.data() + b * C * H * W, C, H, W, k, stride, padding, Ho, Wo,
                       col.data());
        float* ob = out.mutable_data() + b * F * P;
        for (int f = 0; f < F; ++f) {
            float* orow = ob + static_cast<int64_t>(f) * P;
            const float bv = bias.data()[f];
            for (int64_t p = 0; p < P; ++p) orow[p] = bv;
            const float* wrow = weight.data() + static_cast<int64_t>(f) * K;
            for (int kk = 0; kk < K; ++kk) {
                const float wv = wrow[kk];
                if (wv == 0.f) continue;
                detail::lane_axpy(wv, col.data() + static_cast<int64_t>(kk) * P, orow, P);
            }
        }
    });

    detail::wire(out, {input, weight, bias},
                 [input, weight, bias, B, C, H, W, F, k, stride, padding, Ho, Wo, K,
                  P](const std::vector<float>& g) {
                     // bias grad
                     if (bias.requires_grad()) {
                         auto& gb = bias.impl()->ensure_grad();
                         for (int f = 0; f < F; ++f) {
                             float acc = 0.f;
                             for (int b = 0; b < B; ++b)
                                 acc += detail::lane_sum(
                                     g.data() + (static_cast<int64_t>(b) * F + f) * P, P);
                             gb[static_cast<size_t>(f)] += acc;
                         }
                     }
                     auto& col = detail::conv_scratch(0);
                     col.resize(static_cast<size_t>(K) * P);
                     auto& colg = detail::conv_scratch(1);
                     if (input.requires_grad()) colg.resize(static_cast<size_t>(K) * P);
                     for (int b = 0; b < B; ++b) {
                         detail::im2col(input.data() + static_cast<int64_t>(b) * C * H * W, C, H, W,
                                        k, stride, padding, Ho, Wo, col.data());
                         const float* gb = g.data() + static_cast<int64_t>(b) * F * P;
                         if (weight.requires_grad()) {
                             // kk outer keeps each col row cache-hot across filters
                             auto& gw = weight.impl()->ensure_grad();
                             for (int kk = 0; kk < K; ++kk) {
                                 const float* crow = col.data() + static_cast<int64_t>(kk) * P;
                                 for (int f = 0; f < F; ++f)
                                     gw[static_cast<size_t>(f) * K + kk] += detail::lane_dot(
                                         gb + static_cast<int64_t>(f) * P, crow, P);
                             }
                         }
                         if (input.requires_grad()) {
                             std::fill(colg.begin(), colg.end(), 0.f);
                             for (int kk = 0; kk < K; ++kk) {
                                 float* crow = colg.data() + static_cast<int64_t>(kk) * P;
                                 for (int f = 0; f < F; ++f) {
                                     const float wv = weight.data()[static_cast<int64_t>(f) * K + kk];
                                     if (wv == 0.f) continue;
                                     detail::lane_axpy(wv, gb + static_cast<int64_t>(f) * P, crow, P);
                                 }
                             }
                             auto& gi = input.impl()->ensure_grad();
                             detail::col2im(colg.data(), C, H, W, k, stride, padding, Ho, Wo,
                                            gi.data() + static_cast<int64_t>(b) * C * H * W);
                         }
                     }
                 });
    return out;
}

// 2x2 max pooling with argmax-routed gradient. H and W must be even.
inline Tensor maxpool2d(const Tensor& input) {
    if (input.ndim() != 4) throw std::invalid_argument("maxpool2d: input must be 4-d");
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (H % 2 != 0 || W % 2 != 0) throw std::invalid_argument("maxpool2d: odd spatial dims");
    const int Ho = H / 2, Wo = W / 2;
    Tensor out({B, C, Ho, Wo});
    auto arg = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(out.numel()));
    const int64_t BC = static_cast<int64_t>(B) * C;
    for (int64_t bc = 0; bc < BC; ++bc) {
        const float* in = input.data() + bc * H * W;
        float* o = out.mutable_data() + bc * Ho * Wo;
        int32_t* am = arg->data() + bc * Ho * Wo;
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                const int base = 2 * y * W + 2 * x;
                int best = base;
                float bv = in[base];
                const int cand[3] = {base + 1, base + W, base + W + 1};
                for (int c : cand)
                    if (in[c] > bv) {
                        bv = in[c];
                        best = c;
                    }
                o[static_cast<int64_t>(y) * Wo + x] = bv;
                am[static_cast<int64_t>(y) * Wo + x] = best;
            }
        }
    }
    detail::wire(out, {input}, [input, arg, H, W, Ho, Wo, BC](const std::vector<float>& g) {
        if (!input.requires_grad()) return;
        auto& gi = input.impl()->ensure_grad();
        for (int64_t bc = 0; bc < BC; ++bc) {
            const float* gr = g.data() + bc * Ho * Wo;
            const int32_t* am = arg->data() + bc * Ho * Wo;
            float* gin = gi.data() + bc * H * W;
            for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) gin[am[i]] += gr[i];
        }
    });
    return out;
}

namespace detail {

struct LerpTap {
    int i0, i1;
    float w0, w1;
};

// align_corners=false source taps for 2x upsampling along one axis.
inline std::vector<LerpTap> bilinear_taps(int out_n, int in_n) {
    std::vector<LerpTap> taps(static_cast<size_t>(out_n));
    for (int o = 0; o < out_n; ++o) {
        float src = (o + 0.5f) * 0.5f - 0.5f;
        if (src < 0.f) src = 0.f;
        if (src > in_n - 1) src = static_cast<float>(in_n - 1);
        const int i0 = static_cast<int>(src);
        const int i1 = std::min(i0 + 1, in_n - 1);
        const float w1 = src - static_cast<float>(i0);
        taps[static_cast<size_t>(o)] = {i0, i1, 1.f - w1, w1};
    }
    return taps;
}

}  // namespace detail

// Bilinear 2x upsampling (align_corners=false).
inline Tensor upsample_bilinear2x(const Tensor& input) {
    if (input.ndim() != 4) throw std::invalid_argument("upsample: input must be 4-d");
    const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Ho = 2 * H, Wo = 2 * W;
    Tensor out({B, C, Ho, Wo});
    const auto ty = detail::bilinear_taps(Ho, H);
    const auto tx = detail::bilinear_taps(Wo, W);
    const int64_t BC = static_cast<int64_t>(B) * C;
    for (int64_t bc = 0; bc < BC; ++bc) {
        const float* in = input.data() + bc * H * W;
        float* o = out.mutable_data() + bc * Ho * Wo;
        for (int y = 0; y < Ho; ++y) {
            const auto& a = ty[static_cast<size_t>(y)];
            for (int x = 0; x < Wo; ++x) {
                const auto& b = tx[static_cast<size_t>(x)];
                o[static_cast<int64_t>(y) * Wo + x] =
                    a.w0 * (b.w0 * in[a.i0 * W + b.i0] + b.w1 * in[a.i0 * W + b.i1]) +
                    a.w1 * (b.w0 * in[a.i1 * W + b.i0] + b.w1 * in[a.i1 * W + b.i1]);
            }
        }
    }
    detail::wire(out, {input}, [input, ty, tx, H, W, Ho, Wo, BC](const std::vector<float>& g) {
        if (!input.requires_grad()) return;
        auto& gi = input.impl()->ensure_grad();
        for (int64_t bc = 0; bc < BC; ++bc) {
            const float* gr = g.data() + bc * Ho * Wo;
            float* gin = gi.data() + bc * H * W;
            for (int y = 0; y < Ho; ++y) {
                const auto& a = ty[static_cast<size_t>(y)];
                for (int x = 0; x < Wo; ++x) {
                    const auto& b = tx[static_cast<size_t>(x)];
                    const float gv = gr[static_cast<int64_t>(y) * Wo + x];
                    gin[a.i0 * W + b.i0] += a.w0 * b.w0 * gv;
                    gin[a.i0 * W + b.i1] += a.w0 * b.w1 * gv;
                    gin[a.i1 * W + b.i0] += a.w1 * b.w0 * gv;
                    gin[a.i1 * W + b.i1] += a.w1 * b.w1 * gv;
                }
            }
        }
    });
    return out;
}

}  // namespace radcine
