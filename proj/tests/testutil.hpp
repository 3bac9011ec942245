#pragma once

#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "radcine/tensor.hpp"

namespace radcine::testutil {

inline void fill_uniform(Tensor& t, std::mt19937& rng, float lo = -1.f, float hi = 1.f) {
    std::uniform_real_distribution<float> d(lo, hi);
    for (int64_t i = 0; i < t.numel(); ++i) t.mutable_data()[i] = d(rng);
}

inline Tensor random_tensor(Shape s, std::mt19937& rng, float lo = -1.f, float hi = 1.f) {
    Tensor t(std::move(s));
    fill_uniform(t, rng, lo, hi);
    return t;
}

// Central finite differences of a scalar-valued function w.r.t. one element
// of `param`. The function must re-run the full forward pass.
inline double fd_grad(const std::function<double()>& loss_fn, Tensor& param, int64_t index,
                      double eps = 1e-3) {
    float* p = param.mutable_data() + index;
    const float saved = *p;
    *p = static_cast<float>(saved + eps);
    const double lp = loss_fn();
    *p = static_cast<float>(saved - eps);
    const double lm = loss_fn();
    *p = saved;
    return (lp - lm) / (2.0 * eps);
}

// Relative error with a floor so near-zero pairs compare absolutely.
inline double rel_err(double a, double b, double floor = 1e-6) {
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

// Checks reverse-mode gradients of loss_builder (which must build a fresh
// graph from the given leaves) against central differences on `n_probe`
// deterministic-random elements of each leaf. Probes whose loss delta is
// below the float32 measurement floor are redrawn: a central difference
// carries no signal there (the analytic path still covers those weights
// through the probes that do register).
inline double max_grad_rel_err(const std::function<Tensor()>& loss_builder,
                               std::vector<Tensor> leaves, std::mt19937& rng, int n_probe = 5,
                               double eps = 1e-3) {
    for (auto& l : leaves) l.set_requires_grad(true);
    Tensor loss = loss_builder();
    backward(loss);
    auto loss_value = [&]() {
        NoGradGuard ng;
        return static_cast<double>(loss_builder().item());
    };
    const double l0 = std::abs(loss.item());
    const double delta_floor = 2e-5 * std::max(1.0, l0);
    double worst = 0.0;
    int compared = 0;
    for (auto& leaf : leaves) {
        if (!leaf.has_grad()) continue;
        std::uniform_int_distribution<int64_t> pick(0, leaf.numel() - 1);
        int kept = 0;
        for (int attempt = 0; attempt < 40 * n_probe && kept < n_probe; ++attempt) {
            const int64_t idx = pick(rng);
            float* p = leaf.mutable_data() + idx;
            const float saved = *p;
            *p = static_cast<float>(saved + eps);
            const double lp = loss_value();
            *p = static_cast<float>(saved - eps);
            const double lm = loss_value();
            *p = saved;
            if (std::abs(lp - lm) < delta_floor) continue;  // unmeasurable at float32
            const double fd = (lp - lm) / (2.0 * eps);
            const double ad = leaf.grad()[static_cast<size_t>(idx)];
            worst = std::max(worst, rel_err(fd, ad, 1e-3));
            ++kept;
            ++compared;
        }
    }
    if (compared == 0) throw std::runtime_error("max_grad_rel_err: no measurable probes");
    return worst;
}

// O(N^2) reference DFT, forward kernel exp(-2 pi i k n / N), unnormalized.
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x,
                                                   bool inverse) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double sgn = inverse ? +1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (size_t j = 0; j < n; ++j) {
            const double a = sgn * 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(j) /
                             static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace radcine::testutil
