#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace radcine {

using cfloat = std::complex<float>;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// Iterative radix-2 Cooley-Tukey, in place, unnormalized.
// sign = -1 for the forward transform exp(-i 2 pi k n / N).
inline void fft_pow2(cfloat* x, int n, int sign, const std::vector<cfloat>& tw) {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < half; ++k) {
                cfloat w = tw[k * step];
                if (sign > 0) w = std::conj(w);
                const cfloat u = x[i + k];
                const cfloat v = x[i + k + half] * w;
                x[i + k] = u + v;
                x[i + k + half] = u - v;
            }
        }
    }
}

}  // namespace detail

// One-dimensional complex FFT plan of fixed length. Power-of-two lengths run
// radix-2 directly; other lengths go through Bluestein's chirp-z algorithm on
// an internal power-of-two transform. Transforms are unnormalized in both
// directions (forward kernel exp(-i k n 2pi/N), inverse exp(+i k n 2pi/N)),
// so ifft(fft(x)) == N * x.
class FftPlan1d {
public:
    FftPlan1d() = default;

    explicit FftPlan1d(int n) : n_(n) {
        if (n <= 0) throw std::invalid_argument("FftPlan1d: length must be positive");
        if (is_pow2(n_)) {
            init_twiddles(twiddle_, n_);
        } else {
            // Bluestein: convolve with the chirp on a pow2 grid of size >= 2n-1.
            l_ = 1;
            while (l_ < 2 * n_ - 1) l_ <<= 1;
            init_twiddles(twiddle_, l_);
            chirp_.resize(n_);
            bq_.assign(l_, cfloat(0.f, 0.f));
            for (int i = 0; i < n_; ++i) {
                // angle = pi * i^2 / n, computed mod 2n to keep the double small
                const int64_t q = (static_cast<int64_t>(i) * i) % (2LL * n_);
                const double a = M_PI * static_cast<double>(q) / static_cast<double>(n_);
                chirp_[i] = cfloat(static_cast<float>(std::cos(a)), static_cast<float>(std::sin(a)));
            }
            for (int i = 0; i < n_; ++i) {
                bq_[i] = chirp_[i];
                if (i > 0) bq_[l_ - i] = chirp_[i];
            }
            detail::fft_pow2(bq_.data(), l_, -1, twiddle_);
        }
    }

    int size() const { return n_; }

    // In-place transform of a contiguous length-n buffer.
    void exec(cfloat* x, bool inverse) const {
        if (is_pow2(n_)) {
            detail::fft_pow2(x, n_, inverse ? +1 : -1, twiddle_);
            return;
        }
        // Bluestein. x_k' = conj(c_k) x_k for forward; the inverse transform is
        // conj(fft(conj(x))) without the 1/N factor.
        std::vector<cfloat> a(l_, cfloat(0.f, 0.f));
        for (int i = 0; i < n_; ++i) {
            const cfloat c = inverse ? chirp_[i] : std::conj(chirp_[i]);
            a[i] = x[i] * c;
        }
        detail::fft_pow2(a.data(), l_, -1, twiddle_);
        if (inverse) {
            for (int i = 0; i < l_; ++i) a[i] *= std::conj(bq_[i]);
        } else {
            for (int i = 0; i < l_; ++i) a[i] *= bq_[i];
        }
        detail::fft_pow2(a.data(), l_, +1, twiddle_);
        const float inv_l = 1.f / static_cast<float>(l_);
        for (int i = 0; i < n_; ++i) {
            const cfloat c = inverse ? chirp_[i] : std::conj(chirp_[i]);
            x[i] = a[i] * inv_l * c;
        }
    }

private:
    static void init_twiddles(std::vector<cfloat>& tw, int n) {
        tw.resize(n / 2);
        for (int k = 0; k < n / 2; ++k) {
            const double a = -2.0 * M_PI * k / n;
            tw[k] = cfloat(static_cast<float>(std::cos(a)), static_cast<float>(std::sin(a)));
        }
    }

    int n_ = 0;
    int l_ = 0;                    // Bluestein pow2 length
    std::vector<cfloat> twiddle_;  // for length n_ (pow2) or l_ (Bluestein)
    std::vector<cfloat> chirp_;
    std::vector<cfloat> bq_;       // FFT of the chirp filter
};

// 2D transform over a row-major (n0, n1) buffer (n1 contiguous).
inline void fft_2d(cfloat* x, int n0, int n1, const FftPlan1d& p0, const FftPlan1d& p1,
                   bool inverse) {
    for (int i = 0; i < n0; ++i) p1.exec(x + static_cast<int64_t>(i) * n1, inverse);
    std::vector<cfloat> col(n0);
    for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n0; ++i) col[i] = x[static_cast<int64_t>(i) * n1 + j];
        p0.exec(col.data(), inverse);
        for (int i = 0; i < n0; ++i) x[static_cast<int64_t>(i) * n1 + j] = col[i];
    }
}

}  // namespace radcine
