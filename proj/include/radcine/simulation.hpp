#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "radcine/encoding.hpp"
#include "radcine/rng.hpp"

namespace radcine {

struct PhantomConfig {
    int nx = 64, ny = 64, nt = 16;
    int n_ellipses = 4;           // static background ellipses
    double heart_rate_cycles = 2; // beats per clip
    uint64_t seed = 0;
};

namespace detail {

struct Ellipse {
    double cx, cy, rx, ry, intensity, edge;
};

// soft ellipse indicator: 1 inside, smooth roll-off of the given edge width
inline double ellipse_value(const Ellipse& e, double x, double y) {
    const double q = std::sqrt(((x - e.cx) / e.rx) * ((x - e.cx) / e.rx) +
                               ((y - e.cy) / e.ry) * ((y - e.cy) / e.ry));
    if (q <= 1.0) return 1.0;
    const double d = (q - 1.0) / e.edge;
    if (d >= 1.0) return 0.0;
    const double s = 1.0 - d;
    return s * s * (3.0 - 2.0 * s);  // smoothstep
}

}  // namespace detail

// Complex dynamic phantom: smooth static background ellipses plus one
// "ventricle" whose radii oscillate over the clip, with a smooth spatial
// phase ramp. Magnitude stays in [0, 1] via saturating composition.
inline CineImage make_phantom(const PhantomConfig& cfg) {
    if (cfg.nx <= 0 || cfg.ny <= 0 || cfg.nt <= 0) throw std::invalid_argument("make_phantom: bad dims");
    std::mt19937 rng = make_rng(cfg.seed, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // body outline
    std::vector<detail::Ellipse> bg;
    bg.push_back({0.0, 0.0, 0.74, 0.82, 0.5, 0.12});
    for (int i = 0; i < cfg.n_ellipses; ++i) {
        detail::Ellipse e;
        e.cx = -0.45 + 0.9 * u(rng);
        e.cy = -0.45 + 0.9 * u(rng);
        e.rx = 0.06 + 0.16 * u(rng);
        e.ry = 0.06 + 0.16 * u(rng);
        e.intensity = 0.25 + 0.5 * u(rng);
        e.edge = 0.25 + 0.3 * u(rng);
        bg.push_back(e);
    }
    // moving ventricle
    const double vcx = -0.12 + 0.24 * u(rng);
    const double vcy = -0.12 + 0.24 * u(rng);
    const double vr0 = 0.18 + 0.1 * u(rng);
    const double vamp = 0.22 + 0.12 * u(rng);
    const double vphase = 2.0 * M_PI * u(rng);
    const double vint = 0.75 + 0.2 * u(rng);

    // smooth phase ramp making the image genuinely complex
    const double pa = -1.2 + 2.4 * u(rng);
    const double pb = -1.2 + 2.4 * u(rng);
    const double pc = 2.0 * M_PI * u(rng);

    CineImage img(cfg.nx, cfg.ny, cfg.nt);
    for (int t = 0; t < cfg.nt; ++t) {
        const double r_t = vr0 * (1.0 + vamp * std::sin(2.0 * M_PI * cfg.heart_rate_cycles * t /
                                                            cfg.nt +
                                                        vphase));
        detail::Ellipse vent{vcx, vcy, r_t, r_t * 1.15, vint, 0.18};
        for (int ix = 0; ix < cfg.nx; ++ix) {
            const double x = (2.0 * ix - cfg.nx) / cfg.nx;
            for (int iy = 0; iy < cfg.ny; ++iy) {
                const double y = (2.0 * iy - cfg.ny) / cfg.ny;
                double acc = 1.0;
                for (const auto& e : bg) acc *= 1.0 - e.intensity * detail::ellipse_value(e, x, y);
                acc *= 1.0 - vint * detail::ellipse_value(vent, x, y);
                const double mag = 1.0 - acc;  // in [0, 1)
                const double ph = pa * x + pb * y + pc;
                img.at(ix, iy, t) = cfloat(static_cast<float>(mag * std::cos(ph)),
                                           static_cast<float>(mag * std::sin(ph)));
            }
        }
    }
    return img;
}

// Gaussian-profile coil sensitivities centered on a circle around the FOV,
// with smooth per-coil phase, SOS-normalized to 1 at every pixel.
inline CoilMaps make_coil_maps(int nx, int ny, int nc, uint64_t seed) {
    if (nc < 1) throw std::invalid_argument("make_coil_maps: need nc >= 1");
    std::mt19937 rng = make_rng(seed, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    CoilMaps maps;
    maps.nc = nc;
    maps.nx = nx;
    maps.ny = ny;
    maps.maps.resize(static_cast<size_t>(nc) * nx * ny);

    const double sigma = 0.9;
    std::vector<double> ang(static_cast<size_t>(nc)), ph0(static_cast<size_t>(nc)),
        gx(static_cast<size_t>(nc)), gy(static_cast<size_t>(nc));
    for (int c = 0; c < nc; ++c) {
        ang[static_cast<size_t>(c)] = 2.0 * M_PI * c / nc + 0.2 * u(rng);
        ph0[static_cast<size_t>(c)] = 2.0 * M_PI * u(rng);
        gx[static_cast<size_t>(c)] = -0.8 + 1.6 * u(rng);
        gy[static_cast<size_t>(c)] = -0.8 + 1.6 * u(rng);
    }
    for (int ix = 0; ix < nx; ++ix) {
        const double x = (2.0 * ix - nx) / nx;
        for (int iy = 0; iy < ny; ++iy) {
            const double y = (2.0 * iy - ny) / ny;
            double sos = 0.0;
            std::vector<std::complex<double>> vals(static_cast<size_t>(nc));
            for (int c = 0; c < nc; ++c) {
                const double cx = 1.15 * std::cos(ang[static_cast<size_t>(c)]);
                const double cy = 1.15 * std::sin(ang[static_cast<size_t>(c)]);
                const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                const double mag = std::exp(-r2 / (2.0 * sigma * sigma));
                const double ph = ph0[static_cast<size_t>(c)] + gx[static_cast<size_t>(c)] * x +
                                  gy[static_cast<size_t>(c)] * y;
                vals[static_cast<size_t>(c)] = std::polar(mag, ph);
                sos += mag * mag;
            }
            const double inv = 1.0 / std::sqrt(sos);
            for (int c = 0; c < nc; ++c)
                maps.maps[(static_cast<size_t>(c) * nx + ix) * ny + iy] =
                    cfloat(static_cast<float>(vals[static_cast<size_t>(c)].real() * inv),
                           static_cast<float>(vals[static_cast<size_t>(c)].imag() * inv));
        }
    }
    return maps;
}

// Per-coil standardization factors recorded alongside simulated data.
struct NormFactors {
    std::vector<cfloat> mean;  // complex mean per coil
    std::vector<float> std;    // per-component std per coil
};

// Retrospective acquisition: y = A x_gt, then per coil the samples are
// centered and scaled to unit per-component standard deviation, i.i.d.
// N(0, sigma^2) noise is added to the real and imaginary parts in those
// standardized units, and the standardization is undone before returning so
// the data stays in the operator's units. The factors go into the metadata.
inline KSpaceData simulate_acquisition(const EncodingOp& op, const CineImage& x_gt, double sigma,
                                       uint64_t seed, NormFactors* factors = nullptr) {
    if (sigma < 0) throw std::invalid_argument("simulate_acquisition: sigma must be >= 0");
    KSpaceData y = apply_A(op, x_gt);
    std::mt19937 rng = make_rng(seed, 3);
    std::normal_distribution<float> gauss(0.f, 1.f);

    NormFactors nf;
    nf.mean.resize(static_cast<size_t>(y.nc));
    nf.std.resize(static_cast<size_t>(y.nc));
    const int64_t per_coil = static_cast<int64_t>(y.nt) * y.m;
    for (int c = 0; c < y.nc; ++c) {
        cfloat* d = y.data.data() + static_cast<int64_t>(c) * per_coil;
        std::complex<double> mean(0, 0);
        for (int64_t i = 0; i < per_coil; ++i) mean += std::complex<double>(d[i]);
        mean /= static_cast<double>(per_coil);
        double var = 0;
        for (int64_t i = 0; i < per_coil; ++i)
            var += std::norm(std::complex<double>(d[i]) - mean);
        // per-component std: |.|^2 spreads over two components
        const double sd = std::sqrt(var / (2.0 * static_cast<double>(per_coil)));
        nf.mean[static_cast<size_t>(c)] = cfloat(static_cast<float>(mean.real()),
                                                 static_cast<float>(mean.imag()));
        nf.std[static_cast<size_t>(c)] = static_cast<float>(sd);
        if (sigma > 0) {
            const float s = static_cast<float>(sd);
            for (int64_t i = 0; i < per_coil; ++i) {
                // equivalent to standardize -> add N(0, sigma^2) -> undo
                d[i] += cfloat(static_cast<float>(sigma) * s * gauss(rng),
                               static_cast<float>(sigma) * s * gauss(rng));
            }
        }
    }
    if (factors) *factors = nf;
    return y;
}

struct Sample {
    KSpaceData y;
    CineImage x_init;  // A# y
    CineImage gt;
    uint64_t seed = 0;
};

struct Dataset {
    Trajectory traj;
    DensityWeights dens;
    CoilMaps maps;
    std::vector<Sample> train, val, test;
    double sigma = 0.02;
    uint64_t seed = 0;
};

// Split seeds are disjoint by construction: sample i of split s draws from
// base_seed + global_index, with global indices partitioned train/val/test.
inline Dataset make_dataset(const EncodingOp& op, int n_train, int n_val, int n_test,
                            PhantomConfig proto, double sigma, uint64_t seed) {
    if (n_train < 0 || n_val < 0 || n_test < 0) throw std::invalid_argument("make_dataset: bad split");
    Dataset ds;
    ds.traj = op.traj;
    ds.dens = op.dens;
    ds.maps = op.maps;
    ds.sigma = sigma;
    ds.seed = seed;

    int global = 0;
    auto gen_split = [&](int n, std::vector<Sample>& out) {
        out.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i, ++global) {
            Sample s;
            s.seed = seed + static_cast<uint64_t>(global);
            PhantomConfig cfg = proto;
            cfg.seed = s.seed;
            std::mt19937 r = make_rng(s.seed, 4);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            cfg.heart_rate_cycles = 1.0 + 2.0 * u(r);
            s.gt = make_phantom(cfg);
            s.y = simulate_acquisition(op, s.gt, sigma, s.seed);
            s.x_init = apply_A_sharp(op, s.y);
            out.push_back(std::move(s));
        }
    };
    gen_split(n_train, ds.train);
    gen_split(n_val, ds.val);
    gen_split(n_test, ds.test);
    return ds;
}

// --- dataset directory layout -----------------------------------------------
// out/
//   meta.json                    dataset-level parameters
//   <split>/<i>/ksp.bin xi.bin gt.bin meta.json

inline void save_dataset(const std::string& dir, const Dataset& ds, const PhantomConfig& proto) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    io::json meta;
    meta["nx"] = proto.nx;
    meta["ny"] = proto.ny;
    meta["nt"] = proto.nt;
    meta["n_c"] = ds.maps.nc;
    meta["spokes_per_frame"] = ds.traj.spokes_per_frame;
    meta["samples_per_spoke"] = ds.traj.samples_per_spoke;
    meta["sigma"] = ds.sigma;
    meta["seed"] = ds.seed;
    meta["splits"] = {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
    std::ofstream(fs::path(dir) / "meta.json") << meta.dump(2) << "\n";
    save_coilmaps((fs::path(dir) / "maps.bin").string(), ds.maps);
    save_trajectory((fs::path(dir) / "traj.bin").string(), ds.traj);

    auto save_split = [&](const char* name, const std::vector<Sample>& split) {
        for (size_t i = 0; i < split.size(); ++i) {
            const fs::path d = fs::path(dir) / name / std::to_string(i);
            fs::create_directories(d);
            save_kspace((d / "ksp.bin").string(), split[i].y);
            save_cine((d / "xi.bin").string(), split[i].x_init);
            save_cine((d / "gt.bin").string(), split[i].gt);
            io::json m;
            m["seed"] = split[i].seed;
            std::ofstream(d / "meta.json") << m.dump(2) << "\n";
        }
    };
    save_split("train", ds.train);
    save_split("val", ds.val);
    save_split("test", ds.test);
}

struct DatasetHeader {
    int nx, ny, nt, nc, spokes_per_frame, samples_per_spoke;
    double sigma;
    uint64_t seed;
    int n_train, n_val, n_test;
};

inline DatasetHeader read_dataset_header(const std::string& dir) {
    std::ifstream f(std::filesystem::path(dir) / "meta.json");
    if (!f) throw MissingArtifactError("read_dataset_header: no meta.json in " + dir);
    io::json meta = io::json::parse(f);
    DatasetHeader h{};
    h.nx = meta["nx"];
    h.ny = meta["ny"];
    h.nt = meta["nt"];
    h.nc = meta["n_c"];
    h.spokes_per_frame = meta["spokes_per_frame"];
    h.samples_per_spoke = meta["samples_per_spoke"];
    h.sigma = meta["sigma"];
    h.seed = meta["seed"];
    h.n_train = meta["splits"]["train"];
    h.n_val = meta["splits"]["val"];
    h.n_test = meta["splits"]["test"];
    return h;
}

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const DatasetHeader h = read_dataset_header(dir);
    Dataset ds;
    ds.sigma = h.sigma;
    ds.seed = h.seed;
    ds.traj = load_trajectory((fs::path(dir) / "traj.bin").string());
    ds.dens = ramp_density(ds.traj);
    ds.maps = load_coilmaps((fs::path(dir) / "maps.bin").string());
    auto load_split = [&](const char* name, int n, std::vector<Sample>& out) {
        for (int i = 0; i < n; ++i) {
            const fs::path d = fs::path(dir) / name / std::to_string(i);
            Sample s;
            s.y = load_kspace((d / "ksp.bin").string());
            s.x_init = load_cine((d / "xi.bin").string());
            s.gt = load_cine((d / "gt.bin").string());
            std::ifstream mf(d / "meta.json");
            if (mf) s.seed = io::json::parse(mf).value("seed", 0ull);
            out.push_back(std::move(s));
        }
    };
    load_split("train", h.n_train, ds.train);
    load_split("val", h.n_val, ds.val);
    load_split("test", h.n_test, ds.test);
    return ds;
}

}  // namespace radcine
