#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "radcine/io.hpp"
#include "radcine/trajectory.hpp"

namespace radcine {

// Diagonal density compensation, same layout as the trajectory coords
// (one weight per sample, frame-major).
struct DensityWeights {
    int n_frames = 0;
    int64_t samples_per_frame = 0;
    std::vector<float> weights;

    const float* frame(int t) const { return weights.data() + samples_per_frame * t; }
};

// Analytic ramp filter for full radial spokes: each sample owns an annular
// cell of area |k| * dtheta * dk (dtheta = pi / spokes-per-frame), with the
// k=0 sample assigned a disc of radius dk/2 shared by the frame's spokes.
// Weights are the cell areas divided by (2 pi)^2, so the per-frame sum is
// the area of the sampled |k| <= pi disc over (2 pi)^2, i.e. pi/4, and
// AH W approximates the inverse of the forward operator. Each frame is
// rescaled so the sum is exactly pi/4.
inline DensityWeights ramp_density(const Trajectory& traj) {
    if (traj.n_frames <= 0 || traj.spokes_per_frame <= 0 || traj.samples_per_spoke <= 0)
        throw std::invalid_argument("ramp_density: empty frame");

    DensityWeights dw;
    dw.n_frames = traj.n_frames;
    dw.samples_per_frame = traj.samples_per_frame();
    dw.weights.resize(static_cast<size_t>(dw.n_frames) * dw.samples_per_frame);

    const int S = traj.spokes_per_frame;
    const int n = traj.samples_per_spoke;
    const double dk = 2.0 * M_PI / n;
    const double dtheta = M_PI / S;  // full spokes cover both polarities
    const double inv_4pi2 = 1.0 / (4.0 * M_PI * M_PI);

    // Per-spoke profile depends only on |k_r| and S; identical across frames.
    std::vector<double> profile(static_cast<size_t>(n));
    double spoke_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double kr = -M_PI + i * dk;
        double area;
        if (kr == 0.0) {
            area = M_PI * (dk / 2.0) * (dk / 2.0) / S;
        } else {
            area = std::abs(kr) * dtheta * dk;
        }
        profile[static_cast<size_t>(i)] = area * inv_4pi2;
        spoke_sum += profile[static_cast<size_t>(i)];
    }

    const double target = M_PI / 4.0;
    const double frame_sum = spoke_sum * S;
    const double scale = target / frame_sum;

    for (int t = 0; t < dw.n_frames; ++t) {
        float* w = dw.weights.data() + dw.samples_per_frame * t;
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < n; ++i)
                w[static_cast<int64_t>(s) * n + i] =
                    static_cast<float>(profile[static_cast<size_t>(i)] * scale);
    }
    return dw;
}

inline void save_density(const std::string& path, const DensityWeights& dw) {
    io::json h;
    h["kind"] = "density";
    h["n_frames"] = dw.n_frames;
    h["samples_per_frame"] = dw.samples_per_frame;
    h["dtype"] = "f32le";
    io::write_blob(path, h, dw.weights);
}

inline DensityWeights load_density(const std::string& path) {
    std::vector<float> payload;
    io::json h = io::read_blob(path, payload);
    if (h.value("kind", "") != "density") throw FormatError("load_density: wrong kind");
    DensityWeights dw;
    dw.n_frames = h["n_frames"];
    dw.samples_per_frame = h["samples_per_frame"];
    if (payload.size() != static_cast<size_t>(dw.n_frames) * dw.samples_per_frame)
        throw FormatError("load_density: size mismatch");
    dw.weights = std::move(payload);
    return dw;
}

}  // namespace radcine
