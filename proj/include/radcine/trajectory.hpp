#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "radcine/io.hpp"

namespace radcine {

// Golden-angle increment: 180 deg / phi with phi the golden ratio.
inline double golden_angle_increment() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    return M_PI / phi;
}

// Radial k-space sampling pattern partitioned across cine frames. Spoke j
// (global index) has angle j * (pi/phi) mod pi; consecutive spokes are
// assigned to consecutive frames. Coordinates are radians in [-pi, pi).
struct Trajectory {
    int n_frames = 0;
    int spokes_per_frame = 0;
    int samples_per_spoke = 0;
    int nyquist_spokes = 0;            // spokes needed per frame at the Nyquist limit
    std::vector<double> spoke_angles;  // global spoke order, in [0, pi)
    std::vector<float> coords;         // (frame, spoke, sample, {kx, ky})

    int total_spokes() const { return n_frames * spokes_per_frame; }
    int64_t samples_per_frame() const {
        return static_cast<int64_t>(spokes_per_frame) * samples_per_spoke;
    }
    const float* frame_coords(int t) const { return coords.data() + 2 * samples_per_frame() * t; }
};

// Spokes per frame required to sample an n_x-pixel image at the Nyquist
// limit: ceil(pi/2 * n_x).
inline int nyquist_spoke_count(int n_x) {
    if (n_x < 2) throw std::invalid_argument("nyquist_spoke_count: n_x must be >= 2");
    return static_cast<int>(std::ceil(M_PI / 2.0 * n_x));
}

inline Trajectory golden_angle_trajectory(int n_x, int n_frames, int spokes_per_frame,
                                          int samples_per_spoke) {
    if (n_x < 2 || n_frames <= 0 || spokes_per_frame <= 0 || samples_per_spoke <= 0)
        throw std::invalid_argument("golden_angle_trajectory: sizes must be positive");
    if (samples_per_spoke % 2 != 0)
        throw std::invalid_argument("golden_angle_trajectory: samples_per_spoke must be even");

    Trajectory traj;
    traj.n_frames = n_frames;
    traj.spokes_per_frame = spokes_per_frame;
    traj.samples_per_spoke = samples_per_spoke;
    traj.nyquist_spokes = nyquist_spoke_count(n_x);

    const int total = n_frames * spokes_per_frame;
    traj.spoke_angles.resize(static_cast<size_t>(total));
    traj.coords.resize(static_cast<size_t>(total) * samples_per_spoke * 2);

    const double dtheta = golden_angle_increment();
    const double dk = 2.0 * M_PI / samples_per_spoke;  // radial step; k_r in [-pi, pi)
    for (int j = 0; j < total; ++j) {
        const double theta = std::fmod(static_cast<double>(j) * dtheta, M_PI);
        traj.spoke_angles[static_cast<size_t>(j)] = theta;
        const double c = std::cos(theta), s = std::sin(theta);
        float* dst = traj.coords.data() + static_cast<size_t>(j) * samples_per_spoke * 2;
        for (int i = 0; i < samples_per_spoke; ++i) {
            const double kr = -M_PI + i * dk;
            dst[2 * i] = static_cast<float>(kr * c);
            dst[2 * i + 1] = static_cast<float>(kr * s);
        }
    }
    return traj;
}

// N_t * N_rad / N_theta; 1.0 means every frame fully sampled.
inline double acceleration_factor(const Trajectory& traj) {
    if (traj.total_spokes() <= 0) throw std::invalid_argument("acceleration_factor: no spokes");
    return static_cast<double>(traj.n_frames) * traj.nyquist_spokes / traj.total_spokes();
}

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
    io::json h;
    h["kind"] = "trajectory";
    h["n_frames"] = traj.n_frames;
    h["spokes_per_frame"] = traj.spokes_per_frame;
    h["samples_per_spoke"] = traj.samples_per_spoke;
    h["nyquist_spokes"] = traj.nyquist_spokes;
    h["dtype"] = "f32le";
    h["layout"] = "frame-major (kx,ky) pairs";
    io::write_blob(path, h, traj.coords);
}

inline Trajectory load_trajectory(const std::string& path) {
    std::vector<float> payload;
    io::json h = io::read_blob(path, payload);
    if (h.value("kind", "") != "trajectory") throw FormatError("load_trajectory: wrong kind");
    Trajectory traj;
    traj.n_frames = h["n_frames"];
    traj.spokes_per_frame = h["spokes_per_frame"];
    traj.samples_per_spoke = h["samples_per_spoke"];
    traj.nyquist_spokes = h["nyquist_spokes"];
    const int total = traj.total_spokes();
    traj.spoke_angles.resize(static_cast<size_t>(total));
    const double dtheta = golden_angle_increment();
    for (int j = 0; j < total; ++j)
        traj.spoke_angles[static_cast<size_t>(j)] = std::fmod(j * dtheta, M_PI);
    if (payload.size() != static_cast<size_t>(total) * traj.samples_per_spoke * 2)
        throw FormatError("load_trajectory: size mismatch");
    traj.coords = std::move(payload);
    return traj;
}

}  // namespace radcine
