#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "radcine/fft.hpp"

namespace radcine {

namespace detail {

// Modified Bessel function of the first kind, order zero (power series;
// converges quickly for the beta range used here).
inline double bessel_i0(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// Fourier transform of the Kaiser-Bessel interpolation kernel
// K(u) = I0(beta sqrt(1-(2u/J)^2)) / I0(beta), |u| <= J/2, evaluated at
// spatial frequency xi in cycles per grid cell.
inline double kb_fourier(double beta, int width, double xi) {
    const double t = M_PI * width * xi;
    const double z = beta * beta - t * t;
    double s;
    if (z > 0) {
        const double r = std::sqrt(z);
        s = std::sinh(r) / r;
    } else if (z < 0) {
        const double r = std::sqrt(-z);
        s = std::sin(r) / r;
    } else {
        s = 1.0;
    }
    return width * s / bessel_i0(beta);
}

}  // namespace detail

// Beatty et al. choice of the KB shape parameter for kernel width J and
// oversampling alpha.
inline double beatty_beta(int kernel_width, double osf) {
    const double j = kernel_width, a = osf;
    const double arg = (j / a) * (j / a) * (a - 0.5) * (a - 0.5) - 0.8;
    if (arg <= 0) throw std::invalid_argument("beatty_beta: invalid width/osf combination");
    return M_PI * std::sqrt(arg);
}

// Gridding plan for one 2D frame: fixed nonuniform coordinates (radians in
// [-pi, pi)^2), oversampled FFT grid, tabulated KB kernel and analytic
// deapodization. forward() evaluates X(k) = sum_r x(r) exp(-i k.r) with r
// the centered integer pixel grid; adjoint() is the exact transpose.
struct NufftPlan {
    int nx = 0, ny = 0;
    int gx = 0, gy = 0;
    double osf = 2.0;
    int kernel_width = 4;
    double kb_beta = 0.0;
    std::vector<float> kernel_table;   // K on [0, J/2], 1024 samples
    std::vector<float> deapod;         // (nx, ny) multiplier applied in image space
    std::vector<float> coords;         // (m, {kx,ky}) as planned
    int64_t n_samples = 0;

    // precomputed per-sample taps
    std::vector<int32_t> idx0x, idx0y;  // first grid index per axis (unwrapped)
    std::vector<float> wx, wy;          // (m, J) kernel weights per axis

    FftPlan1d fft_x, fft_y;

    int64_t grid_size() const { return static_cast<int64_t>(gx) * gy; }
};

namespace detail {

inline float kernel_lookup(const NufftPlan& p, float u) {
    const float half = static_cast<float>(p.kernel_width) / 2.f;
    const float au = std::fabs(u);
    if (au >= half) return 0.f;
    const float pos = au * static_cast<float>(p.kernel_table.size() - 1) / half;
    const int i = static_cast<int>(pos);
    const float frac = pos - static_cast<float>(i);
    const size_t si = static_cast<size_t>(i);
    if (si + 1 >= p.kernel_table.size()) return p.kernel_table.back();
    return p.kernel_table[si] * (1.f - frac) + p.kernel_table[si + 1] * frac;
}

}  // namespace detail

inline NufftPlan make_plan(int nx, int ny, const float* coords, int64_t n_samples,
                           double osf = 2.0, int kernel_width = 4) {
    if (nx <= 0 || ny <= 0 || n_samples <= 0) throw std::invalid_argument("make_plan: bad sizes");
    NufftPlan p;
    p.nx = nx;
    p.ny = ny;
    p.osf = osf;
    p.kernel_width = kernel_width;
    p.gx = static_cast<int>(std::lround(osf * nx));
    p.gy = static_cast<int>(std::lround(osf * ny));
    if (p.gx % 2 != 0 || p.gy % 2 != 0)
        throw std::invalid_argument("make_plan: oversampled grid must have even dims");
    p.kb_beta = beatty_beta(kernel_width, osf);
    p.n_samples = n_samples;
    p.coords.assign(coords, coords + 2 * n_samples);

    for (int64_t i = 0; i < n_samples; ++i) {
        const float kx = coords[2 * i], ky = coords[2 * i + 1];
        if (!(kx >= -static_cast<float>(M_PI) && kx < static_cast<float>(M_PI)) ||
            !(ky >= -static_cast<float>(M_PI) && ky < static_cast<float>(M_PI)))
            throw std::invalid_argument("make_plan: coordinate outside [-pi, pi)");
    }

    // kernel table over [0, J/2]
    const int table_n = 1024;
    p.kernel_table.resize(table_n);
    const double i0b = detail::bessel_i0(p.kb_beta);
    for (int i = 0; i < table_n; ++i) {
        const double u = (static_cast<double>(i) / (table_n - 1)) * kernel_width / 2.0;
        const double t = 1.0 - (2.0 * u / kernel_width) * (2.0 * u / kernel_width);
        p.kernel_table[static_cast<size_t>(i)] =
            static_cast<float>(t > 0 ? detail::bessel_i0(p.kb_beta * std::sqrt(t)) / i0b : 0.0);
    }

    // separable deapodization over the centered image grid, floored to avoid
    // blowup at the corners
    p.deapod.resize(static_cast<size_t>(nx) * ny);
    std::vector<double> dx(static_cast<size_t>(nx)), dy(static_cast<size_t>(ny));
    for (int i = 0; i < nx; ++i)
        dx[static_cast<size_t>(i)] =
            detail::kb_fourier(p.kb_beta, kernel_width, static_cast<double>(i - nx / 2) / p.gx);
    for (int i = 0; i < ny; ++i)
        dy[static_cast<size_t>(i)] =
            detail::kb_fourier(p.kb_beta, kernel_width, static_cast<double>(i - ny / 2) / p.gy);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
            const double v = dx[static_cast<size_t>(ix)] * dy[static_cast<size_t>(iy)];
            p.deapod[static_cast<size_t>(ix) * ny + iy] =
                static_cast<float>(1.0 / std::max(v, 1e-8));
        }

    // per-sample taps
    const int J = kernel_width;
    p.idx0x.resize(static_cast<size_t>(n_samples));
    p.idx0y.resize(static_cast<size_t>(n_samples));
    p.wx.resize(static_cast<size_t>(n_samples) * J);
    p.wy.resize(static_cast<size_t>(n_samples) * J);
    // Taps centered on the continuous grid position: |u - m| <= J/2 for all
    // J taps (floor-based for even J, round-based for odd J).
    auto first_tap = [J](double u) {
        return (J % 2 == 0) ? static_cast<int>(std::floor(u)) - J / 2 + 1
                            : static_cast<int>(std::lround(u)) - (J - 1) / 2;
    };
    for (int64_t i = 0; i < n_samples; ++i) {
        const double ux = p.coords[2 * i] * p.gx / (2.0 * M_PI);
        const double uy = p.coords[2 * i + 1] * p.gy / (2.0 * M_PI);
        const int mx0 = first_tap(ux);
        const int my0 = first_tap(uy);
        p.idx0x[static_cast<size_t>(i)] = mx0;
        p.idx0y[static_cast<size_t>(i)] = my0;
        for (int j = 0; j < J; ++j) {
            p.wx[static_cast<size_t>(i) * J + j] =
                detail::kernel_lookup(p, static_cast<float>(ux - (mx0 + j)));
            p.wy[static_cast<size_t>(i) * J + j] =
                detail::kernel_lookup(p, static_cast<float>(uy - (my0 + j)));
        }
    }

    p.fft_x = FftPlan1d(p.gx);
    p.fft_y = FftPlan1d(p.gy);
    return p;
}

inline void nufft_forward(const NufftPlan& p, const cfloat* image, cfloat* out) {
    std::vector<cfloat> work(static_cast<size_t>(p.grid_size()), cfloat(0.f, 0.f));
    // deapodize and embed centered image into the (ifftshifted) grid
    for (int ix = 0; ix < p.nx; ++ix) {
        const int rx = ix - p.nx / 2;
        const int gxi = rx < 0 ? rx + p.gx : rx;
        for (int iy = 0; iy < p.ny; ++iy) {
            const int ry = iy - p.ny / 2;
            const int gyi = ry < 0 ? ry + p.gy : ry;
            work[static_cast<size_t>(gxi) * p.gy + gyi] =
                image[static_cast<size_t>(ix) * p.ny + iy] *
                p.deapod[static_cast<size_t>(ix) * p.ny + iy];
        }
    }
    fft_2d(work.data(), p.gx, p.gy, p.fft_x, p.fft_y, false);
    // interpolate at the nonuniform points
    const int J = p.kernel_width;
    for (int64_t i = 0; i < p.n_samples; ++i) {
        const int mx0 = p.idx0x[static_cast<size_t>(i)];
        const int my0 = p.idx0y[static_cast<size_t>(i)];
        cfloat acc(0.f, 0.f);
        for (int a = 0; a < J; ++a) {
            const float wxa = p.wx[static_cast<size_t>(i) * J + a];
            if (wxa == 0.f) continue;
            const int mx = ((mx0 + a) % p.gx + p.gx) % p.gx;
            const cfloat* row = work.data() + static_cast<size_t>(mx) * p.gy;
            cfloat racc(0.f, 0.f);
            for (int b = 0; b < J; ++b) {
                const float wyb = p.wy[static_cast<size_t>(i) * J + b];
                if (wyb == 0.f) continue;
                const int my = ((my0 + b) % p.gy + p.gy) % p.gy;
                racc += row[my] * wyb;
            }
            acc += racc * wxa;
        }
        out[i] = acc;
    }
}

inline void nufft_adjoint(const NufftPlan& p, const cfloat* samples, cfloat* image) {
    std::vector<cfloat> work(static_cast<size_t>(p.grid_size()), cfloat(0.f, 0.f));
    const int J = p.kernel_width;
    for (int64_t i = 0; i < p.n_samples; ++i) {
        const int mx0 = p.idx0x[static_cast<size_t>(i)];
        const int my0 = p.idx0y[static_cast<size_t>(i)];
        const cfloat v = samples[i];
        for (int a = 0; a < J; ++a) {
            const float wxa = p.wx[static_cast<size_t>(i) * J + a];
            if (wxa == 0.f) continue;
            const int mx = ((mx0 + a) % p.gx + p.gx) % p.gx;
            cfloat* row = work.data() + static_cast<size_t>(mx) * p.gy;
            const cfloat vx = v * wxa;
            for (int b = 0; b < J; ++b) {
                const float wyb = p.wy[static_cast<size_t>(i) * J + b];
                if (wyb == 0.f) continue;
                const int my = ((my0 + b) % p.gy + p.gy) % p.gy;
                row[my] += vx * wyb;
            }
        }
    }
    fft_2d(work.data(), p.gx, p.gy, p.fft_x, p.fft_y, true);
    for (int ix = 0; ix < p.nx; ++ix) {
        const int rx = ix - p.nx / 2;
        const int gxi = rx < 0 ? rx + p.gx : rx;
        for (int iy = 0; iy < p.ny; ++iy) {
            const int ry = iy - p.ny / 2;
            const int gyi = ry < 0 ? ry + p.gy : ry;
            image[static_cast<size_t>(ix) * p.ny + iy] =
                work[static_cast<size_t>(gxi) * p.gy + gyi] *
                p.deapod[static_cast<size_t>(ix) * p.ny + iy];
        }
    }
}

}  // namespace radcine
