#pragma once

#include "radcine/fft.hpp"
#include "radcine/tensor.hpp"

namespace radcine {

// Orthonormal DFT (1/sqrt(N) in both directions) over the second-to-last
// axis of a [..., N, 2] tensor; the trailing axis holds (re, im). N must be
// a power of two. Backward of the forward transform is the inverse transform
// (the map is unitary).
inline Tensor fft_1d(const Tensor& x, bool inverse) {
    check_complex(x, "fft_1d");
    if (x.ndim() < 2) throw std::invalid_argument("fft_1d: need at least 2 dims");
    const int n = x.shape()[static_cast<size_t>(x.ndim() - 2)];
    if (!is_pow2(n)) throw std::invalid_argument("fft_1d: length must be a power of two");

    Tensor out(x.shape());
    const FftPlan1d plan(n);
    const int64_t rows = x.numel() / (2LL * n);
    const float scl = 1.f / std::sqrt(static_cast<float>(n));
    for (int64_t r = 0; r < rows; ++r) {
        float* raw = out.mutable_data() + r * 2 * n;
        std::memcpy(raw, x.data() + r * 2 * n, static_cast<size_t>(n) * sizeof(cfloat));
        cfloat* dst = reinterpret_cast<cfloat*>(raw);
        plan.exec(dst, inverse);
        for (int i = 0; i < n; ++i) dst[i] *= scl;
    }
    detail::wire(out, {x}, [x, n, inverse, rows, scl](const std::vector<float>& g) {
        if (!x.requires_grad()) return;
        const FftPlan1d plan(n);
        auto& gx = x.impl()->ensure_grad();
        std::vector<cfloat> buf(static_cast<size_t>(n));
        for (int64_t r = 0; r < rows; ++r) {
            std::memcpy(reinterpret_cast<float*>(buf.data()), g.data() + r * 2 * n,
                        static_cast<size_t>(n) * sizeof(cfloat));
            plan.exec(buf.data(), !inverse);
            float* dst = gx.data() + r * 2 * n;
            for (int i = 0; i < n; ++i) {
                dst[2 * i] += buf[static_cast<size_t>(i)].real() * scl;
                dst[2 * i + 1] += buf[static_cast<size_t>(i)].imag() * scl;
            }
        }
    });
    return out;
}

}  // namespace radcine
