#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "radcine/dc_cg.hpp"
#include "radcine/simulation.hpp"
#include "radcine/unrolled.hpp"

namespace radcine {

struct BenchRow {
    int size = 0;
    int n_theta = 0;  // total spokes across frames
    int n_cg = 0;
    double time_ms_mean = 0;
    double time_ms_std = 0;
    double alloc_mb = 0;
    bool failed = false;
};

struct BenchConfig {
    std::vector<int> sizes = {32, 64, 96};
    // total spoke budgets proportional to each size (factors of the paper's
    // 560/1130 at 320 pixels)
    std::vector<double> n_theta_factors = {1.75, 3.53};
    std::vector<int> n_cg_list = {1, 2, 4, 8, 12};
    int reps = 3;
    int nt = 8;
    int nc = 4;
    uint64_t seed = 7;
};

// Times one forward+backward pass of the DC solve (identity CNN-block) per
// configuration. Plan construction happens outside the timed region and a
// warm-up pass is discarded. Memory is the peak tensor-buffer allocation
// during the timed pass (an estimate; OS RSS is not consulted).
inline std::vector<BenchRow> bench_sweep(const BenchConfig& cfg) {
    if (cfg.reps < 3) throw std::invalid_argument("bench_sweep: reps must be >= 3");
    std::vector<BenchRow> rows;
    for (int size : cfg.sizes) {
        for (double factor : cfg.n_theta_factors) {
            const int n_theta = std::max(cfg.nt, static_cast<int>(std::lround(factor * size)));
            const int spokes_per_frame = std::max(1, n_theta / cfg.nt);
            EncodingOp op;
            CineImage gt;
            KSpaceData y;
            try {
                auto traj = golden_angle_trajectory(size, cfg.nt, spokes_per_frame, 2 * size);
                auto dens = ramp_density(traj);
                auto maps = make_coil_maps(size, size, cfg.nc, cfg.seed);
                op = make_encoding_op(traj, maps, dens);
                PhantomConfig pc;
                pc.nx = pc.ny = size;
                pc.nt = cfg.nt;
                pc.seed = cfg.seed;
                gt = make_phantom(pc);
                y = simulate_acquisition(op, gt, 0.02, cfg.seed);
            } catch (const std::bad_alloc&) {
                for (int n_cg : cfg.n_cg_list)
                    rows.push_back({size, n_theta, n_cg, 0, 0, 0, true});
                continue;
            }
            CineImage x0 = apply_A_sharp(op, y);
            CineImage ah = apply_AH(op, y);

            for (int n_cg : cfg.n_cg_list) {
                BenchRow row;
                row.size = size;
                row.n_theta = spokes_per_frame * cfg.nt;
                row.n_cg = n_cg;
                CgConfig cg;
                cg.n_cg = n_cg;
                auto one_pass = [&]() {
                    Tensor x = to_tensor(x0);
                    x.set_requires_grad(true);
                    Tensor lam = Tensor::scalar(0.5f);
                    lam.set_requires_grad(true);
                    Tensor out = solve_dc(op, x, to_tensor(ah), lam, cg);
                    Tensor loss = sum(out);
                    backward(loss);
                };
                try {
                    one_pass();  // warm-up, not timed
                    std::vector<double> times;
                    double peak_mb = 0;
                    for (int rep = 0; rep < cfg.reps; ++rep) {
                        TensorAlloc::reset_peak();
                        const auto t0 = std::chrono::steady_clock::now();
                        one_pass();
                        const auto t1 = std::chrono::steady_clock::now();
                        times.push_back(
                            std::chrono::duration<double, std::milli>(t1 - t0).count());
                        peak_mb = std::max(
                            peak_mb, static_cast<double>(TensorAlloc::peak().load()) / 1e6);
                    }
                    double mean = 0;
                    for (double t : times) mean += t;
                    mean /= static_cast<double>(times.size());
                    double var = 0;
                    for (double t : times) var += (t - mean) * (t - mean);
                    row.time_ms_mean = mean;
                    row.time_ms_std = std::sqrt(var / static_cast<double>(times.size()));
                    row.alloc_mb = peak_mb;
                } catch (const std::bad_alloc&) {
                    row.failed = true;
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    std::vector<std::string> lines;
    for (const auto& r : rows) {
        if (r.failed) {
            lines.push_back(std::to_string(r.size) + "," + std::to_string(r.n_theta) + "," +
                            std::to_string(r.n_cg) + ",oom,oom,oom");
        } else {
            lines.push_back(std::to_string(r.size) + "," + std::to_string(r.n_theta) + "," +
                            std::to_string(r.n_cg) + "," + std::to_string(r.time_ms_mean) + "," +
                            std::to_string(r.time_ms_std) + "," + std::to_string(r.alloc_mb));
        }
    }
    io::write_csv(path, "size,n_theta,n_cg,time_ms_mean,time_ms_std,alloc_mb", lines);
}

// least-squares linear fit R^2 of time against n_cg (used by the trend checks)
inline double linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw std::invalid_argument("linear_fit_r2: need >= 2 points");
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) return 1.0;
    return (sxy * sxy) / (sxx * syy);
}

}  // namespace radcine
