#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "radcine/encoding.hpp"

namespace radcine {

struct MetricRecord {
    double psnr = 0, nrmse = 0, ssim = 0, ms_ssim = 0, uqi = 0;
};

namespace detail {

constexpr int kSsimWindow = 7;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01, kSsimK2 = 0.03;
constexpr double kPsnrCap = 99.0;
constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

inline std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    double sum = 0;
    const double c = (kSsimWindow - 1) / 2.0;
    for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
            const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
            w[static_cast<size_t>(i) * kSsimWindow + j] = std::exp(-d2 / (2 * kSsimSigma * kSsimSigma));
            sum += w[static_cast<size_t>(i) * kSsimWindow + j];
        }
    for (auto& v : w) v /= sum;
    return w;
}

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
};

// one SSIM-family pass over a channel pair; returns (mean luminance term,
// mean contrast-structure term, mean full ssim). C1/C2 = 0 selects UQI-style
// statistics with the 0/0 -> 1 convention (identical constant windows agree
// perfectly).
struct SsimSums {
    double lum = 0, cs = 0, full = 0;
    int windows = 0;
};

inline double safe_ratio(double num, double den) {
    if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
    return num / den;
}

inline SsimSums ssim_pass(const Plane& a, const Plane& b, double c1, double c2) {
    const auto win = gaussian_window();
    SsimSums s;
    const int H = a.h, W = a.w;
    for (int y = 0; y + kSsimWindow <= H; ++y) {
        for (int x = 0; x + kSsimWindow <= W; ++x) {
            double mx = 0, my = 0;
            for (int i = 0; i < kSsimWindow; ++i)
                for (int j = 0; j < kSsimWindow; ++j) {
                    const double wv = win[static_cast<size_t>(i) * kSsimWindow + j];
                    mx += wv * a.v[static_cast<size_t>(y + i) * W + (x + j)];
                    my += wv * b.v[static_cast<size_t>(y + i) * W + (x + j)];
                }
            double sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < kSsimWindow; ++i)
                for (int j = 0; j < kSsimWindow; ++j) {
                    const double wv = win[static_cast<size_t>(i) * kSsimWindow + j];
                    const double da = a.v[static_cast<size_t>(y + i) * W + (x + j)] - mx;
                    const double db = b.v[static_cast<size_t>(y + i) * W + (x + j)] - my;
                    sxx += wv * da * da;
                    syy += wv * db * db;
                    sxy += wv * da * db;
                }
            const double lum = safe_ratio(2 * mx * my + c1, mx * mx + my * my + c1);
            const double cs = safe_ratio(2 * sxy + c2, sxx + syy + c2);
            s.lum += lum;
            s.cs += cs;
            s.full += lum * cs;
            ++s.windows;
        }
    }
    if (s.windows > 0) {
        s.lum /= s.windows;
        s.cs /= s.windows;
        s.full /= s.windows;
    }
    return s;
}

inline Plane downsample2(const Plane& p) {
    Plane q;
    q.h = p.h / 2;
    q.w = p.w / 2;
    q.v.resize(static_cast<size_t>(q.h) * q.w);
    for (int y = 0; y < q.h; ++y)
        for (int x = 0; x < q.w; ++x)
            q.v[static_cast<size_t>(y) * q.w + x] =
                0.25 * (p.v[static_cast<size_t>(2 * y) * p.w + 2 * x] +
                        p.v[static_cast<size_t>(2 * y) * p.w + 2 * x + 1] +
                        p.v[static_cast<size_t>(2 * y + 1) * p.w + 2 * x] +
                        p.v[static_cast<size_t>(2 * y + 1) * p.w + 2 * x + 1]);
    return q;
}

inline double ssim_channel(const Plane& a, const Plane& b, double l_range) {
    const double c1 = kSsimK1 * l_range * kSsimK1 * l_range;
    const double c2 = kSsimK2 * l_range * kSsimK2 * l_range;
    return ssim_pass(a, b, c1, c2).full;
}

inline double uqi_channel(const Plane& a, const Plane& b) {
    return ssim_pass(a, b, 0.0, 0.0).full;
}

// Multi-scale SSIM, 5 scales max; scales that would shrink below the window
// are dropped and the weight subset renormalized.
inline double ms_ssim_channel(Plane a, Plane b, double l_range) {
    const double c1 = kSsimK1 * l_range * kSsimK1 * l_range;
    const double c2 = kSsimK2 * l_range * kSsimK2 * l_range;
    int usable = 0;
    {
        int h = a.h, w = a.w;
        while (usable < 5 && h >= kSsimWindow && w >= kSsimWindow) {
            ++usable;
            h /= 2;
            w /= 2;
        }
    }
    if (usable == 0) throw std::invalid_argument("ms_ssim: image smaller than the window");
    double wsum = 0;
    for (int s = 0; s < usable; ++s) wsum += kMsSsimWeights[s];
    double result = 1.0;
    for (int s = 0; s < usable; ++s) {
        const SsimSums sums = ssim_pass(a, b, c1, c2);
        const double weight = kMsSsimWeights[s] / wsum;
        if (s + 1 == usable) {
            result *= std::pow(std::max(sums.full, 0.0), weight);
        } else {
            result *= std::pow(std::max(sums.cs, 0.0), weight);
            a = downsample2(a);
            b = downsample2(b);
        }
    }
    return result;
}

}  // namespace detail

// Metrics over one complex 2D frame: center crop to roi_frac per dimension,
// real/imaginary parts as channels (similarity measures averaged over the
// two), PSNR peak and SSIM range from max |gt| over the ROI.
inline MetricRecord evaluate_frame(const cfloat* pred, const cfloat* gt, int nx, int ny,
                                   double roi_frac = 0.5) {
    if (!(roi_frac > 0.0 && roi_frac <= 1.0))
        throw std::invalid_argument("evaluate_frame: roi_frac must be in (0, 1]");
    const int rh = std::max(1, static_cast<int>(nx * roi_frac));
    const int rw = std::max(1, static_cast<int>(ny * roi_frac));
    if (rh < detail::kSsimWindow || rw < detail::kSsimWindow)
        throw std::invalid_argument("evaluate_frame: ROI smaller than the SSIM window");
    const int x0 = (nx - rh) / 2, y0 = (ny - rw) / 2;

    detail::Plane pr, pi, gr, gi;
    pr.h = pi.h = gr.h = gi.h = rh;
    pr.w = pi.w = gr.w = gi.w = rw;
    pr.v.resize(static_cast<size_t>(rh) * rw);
    pi.v.resize(pr.v.size());
    gr.v.resize(pr.v.size());
    gi.v.resize(pr.v.size());
    double peak = 0, err2 = 0, ref2 = 0;
    for (int i = 0; i < rh; ++i)
        for (int j = 0; j < rw; ++j) {
            const cfloat p = pred[static_cast<size_t>(x0 + i) * ny + (y0 + j)];
            const cfloat g = gt[static_cast<size_t>(x0 + i) * ny + (y0 + j)];
            const size_t k = static_cast<size_t>(i) * rw + j;
            pr.v[k] = p.real();
            pi.v[k] = p.imag();
            gr.v[k] = g.real();
            gi.v[k] = g.imag();
            peak = std::max(peak, static_cast<double>(std::abs(g)));
            err2 += std::norm(std::complex<double>(p) - std::complex<double>(g));
            ref2 += std::norm(std::complex<double>(g));
        }

    MetricRecord r;
    r.nrmse = ref2 > 0 ? std::sqrt(err2 / ref2) : (err2 > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    const double mse = err2 / (2.0 * rh * rw);  // both channels
    if (mse == 0.0 || peak == 0.0) {
        r.psnr = mse == 0.0 ? detail::kPsnrCap : 0.0;
    } else {
        r.psnr = std::min(detail::kPsnrCap, 20.0 * std::log10(peak / std::sqrt(mse)));
    }
    const double l_range = peak > 0 ? peak : 1.0;
    r.ssim = 0.5 * (detail::ssim_channel(pr, gr, l_range) + detail::ssim_channel(pi, gi, l_range));
    r.ms_ssim = 0.5 * (detail::ms_ssim_channel(pr, gr, l_range) +
                       detail::ms_ssim_channel(pi, gi, l_range));
    r.uqi = 0.5 * (detail::uqi_channel(pr, gr) + detail::uqi_channel(pi, gi));
    return r;
}

inline MetricRecord evaluate_frame(const CineImage& pred, const CineImage& gt, int t,
                                   double roi_frac = 0.5) {
    if (pred.nx != gt.nx || pred.ny != gt.ny || pred.nt != gt.nt)
        throw std::invalid_argument("evaluate_frame: dims mismatch");
    // gather frame t into contiguous (nx, ny)
    std::vector<cfloat> p(static_cast<size_t>(pred.nx) * pred.ny),
        g(static_cast<size_t>(gt.nx) * gt.ny);
    for (int ix = 0; ix < pred.nx; ++ix)
        for (int iy = 0; iy < pred.ny; ++iy) {
            p[static_cast<size_t>(ix) * pred.ny + iy] = pred.at(ix, iy, t);
            g[static_cast<size_t>(ix) * pred.ny + iy] = gt.at(ix, iy, t);
        }
    return evaluate_frame(p.data(), g.data(), pred.nx, pred.ny, roi_frac);
}

// Mean over every frame of every cine pair.
inline MetricRecord evaluate_dataset(const std::vector<CineImage>& preds,
                                     const std::vector<CineImage>& gts, double roi_frac = 0.5) {
    if (preds.empty() || preds.size() != gts.size())
        throw std::invalid_argument("evaluate_dataset: empty or mismatched inputs");
    MetricRecord acc;
    int64_t n = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        for (int t = 0; t < preds[i].nt; ++t) {
            const MetricRecord r = evaluate_frame(preds[i], gts[i], t, roi_frac);
            acc.psnr += r.psnr;
            acc.nrmse += r.nrmse;
            acc.ssim += r.ssim;
            acc.ms_ssim += r.ms_ssim;
            acc.uqi += r.uqi;
            ++n;
        }
    }
    acc.psnr /= static_cast<double>(n);
    acc.nrmse /= static_cast<double>(n);
    acc.ssim /= static_cast<double>(n);
    acc.ms_ssim /= static_cast<double>(n);
    acc.uqi /= static_cast<double>(n);
    return acc;
}

}  // namespace radcine
