#pragma once

#include <complex>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "radcine/dcomp.hpp"
#include "radcine/io.hpp"
#include "radcine/nufft.hpp"
#include "radcine/parallel.hpp"
#include "radcine/rng.hpp"
#include "radcine/tensor.hpp"
#include "radcine/trajectory.hpp"

namespace radcine {

// Complex dynamic image, dims (n_x, n_y, n_t), t fastest.
struct CineImage {
    int nx = 0, ny = 0, nt = 0;
    std::vector<cfloat> data;

    CineImage() = default;
    CineImage(int nx_, int ny_, int nt_)
        : nx(nx_), ny(ny_), nt(nt_), data(static_cast<size_t>(nx_) * ny_ * nt_) {
        if (nx_ <= 0 || ny_ <= 0 || nt_ <= 0) throw std::invalid_argument("CineImage: bad dims");
    }
    cfloat& at(int x, int y, int t) {
        return data[(static_cast<size_t>(x) * ny + y) * nt + t];
    }
    cfloat at(int x, int y, int t) const {
        return data[(static_cast<size_t>(x) * ny + y) * nt + t];
    }
    int64_t numel() const { return static_cast<int64_t>(data.size()); }

    bool all_finite() const {
        for (const auto& v : data)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

// SOS-normalized coil sensitivities, dims (n_c, n_x, n_y), y fastest.
struct CoilMaps {
    int nc = 0, nx = 0, ny = 0;
    std::vector<cfloat> maps;

    const cfloat* coil(int c) const { return maps.data() + static_cast<size_t>(c) * nx * ny; }
};

// Nonuniform k-space data, dims (n_c, n_t, m), sample fastest.
struct KSpaceData {
    int nc = 0, nt = 0;
    int64_t m = 0;  // samples per frame
    std::vector<cfloat> data;

    KSpaceData() = default;
    KSpaceData(int nc_, int nt_, int64_t m_)
        : nc(nc_), nt(nt_), m(m_), data(static_cast<size_t>(nc_) * nt_ * m_) {}
    cfloat* frame(int c, int t) { return data.data() + (static_cast<size_t>(c) * nt + t) * m; }
    const cfloat* frame(int c, int t) const {
        return data.data() + (static_cast<size_t>(c) * nt + t) * m;
    }
};

// Tensor bridge: CineImage <-> (nx, ny, nt, 2) float tensor.
inline Tensor to_tensor(const CineImage& img) {
    Tensor t({img.nx, img.ny, img.nt, 2});
    std::memcpy(t.mutable_data(), reinterpret_cast<const float*>(img.data.data()),
                static_cast<size_t>(t.numel()) * sizeof(float));
    return t;
}

inline CineImage from_tensor(const Tensor& t) {
    if (t.ndim() != 4 || t.shape()[3] != 2)
        throw std::invalid_argument("from_tensor: expected (nx, ny, nt, 2)");
    CineImage img(t.dim(0), t.dim(1), t.dim(2));
    std::memcpy(reinterpret_cast<float*>(img.data.data()), t.data(),
                static_cast<size_t>(t.numel()) * sizeof(float));
    return img;
}

// The dynamic multi-coil radial encoding operator A = (I_nc (x) E) C with
// one NUFFT plan per frame. apply_A is rescaled by 1/sqrt(||A_raw^H A_raw||)
// (estimated once by power iteration) so the normal operator has unit-scale
// spectrum; this keeps regularization weights and CG conditioning meaningful
// across problem sizes. apply_A_sharp compensates the scale so the
// density-weighted initial reconstruction stays an approximate inverse.
struct EncodingOp {
    Trajectory traj;
    DensityWeights dens;
    CoilMaps maps;
    std::vector<NufftPlan> plans;  // one per frame
    int nx = 0, ny = 0, nt = 0, nc = 0;
    float scale = 1.f;  // applied to both A and A^H

    int64_t samples_per_frame() const { return traj.samples_per_frame(); }
};

namespace detail {

inline void check_image(const EncodingOp& op, const CineImage& x, const char* fn) {
    if (x.nx != op.nx || x.ny != op.ny || x.nt != op.nt)
        throw std::invalid_argument(std::string(fn) + ": image dims mismatch");
}

inline void check_kspace(const EncodingOp& op, const KSpaceData& y, const char* fn) {
    if (y.nc != op.nc || y.nt != op.nt || y.m != op.samples_per_frame())
        throw std::invalid_argument(std::string(fn) + ": k-space layout mismatch");
}

}  // namespace detail

inline KSpaceData apply_A(const EncodingOp& op, const CineImage& x) {
    detail::check_image(op, x, "apply_A");
    KSpaceData y(op.nc, op.nt, op.samples_per_frame());
    const int64_t npix = static_cast<int64_t>(op.nx) * op.ny;
    parallel_for(static_cast<int64_t>(op.nc) * op.nt, [&](int64_t job) {
        const int c = static_cast<int>(job / op.nt);
        const int t = static_cast<int>(job % op.nt);
        std::vector<cfloat> frame(static_cast<size_t>(npix));
        const cfloat* cm = op.maps.coil(c);
        for (int64_t p = 0; p < npix; ++p)
            frame[static_cast<size_t>(p)] = cm[p] * x.data[static_cast<size_t>(p) * op.nt + t];
        nufft_forward(op.plans[static_cast<size_t>(t)], frame.data(), y.frame(c, t));
    });
    for (auto& v : y.data) v *= op.scale;
    return y;
}

inline CineImage apply_AH(const EncodingOp& op, const KSpaceData& y) {
    detail::check_kspace(op, y, "apply_AH");
    CineImage out(op.nx, op.ny, op.nt);
    const int64_t npix = static_cast<int64_t>(op.nx) * op.ny;
    // per-(coil,frame) partial images, reduced in fixed order
    std::vector<std::vector<cfloat>> partial(static_cast<size_t>(op.nc) * op.nt);
    parallel_for(static_cast<int64_t>(op.nc) * op.nt, [&](int64_t job) {
        const int c = static_cast<int>(job / op.nt);
        const int t = static_cast<int>(job % op.nt);
        auto& img = partial[static_cast<size_t>(job)];
        img.resize(static_cast<size_t>(npix));
        nufft_adjoint(op.plans[static_cast<size_t>(t)], y.frame(c, t), img.data());
        const cfloat* cm = op.maps.coil(c);
        for (int64_t p = 0; p < npix; ++p) img[static_cast<size_t>(p)] *= std::conj(cm[p]);
    });
    for (int c = 0; c < op.nc; ++c)
        for (int t = 0; t < op.nt; ++t) {
            const auto& img = partial[static_cast<size_t>(c) * op.nt + t];
            for (int64_t p = 0; p < npix; ++p)
                out.data[static_cast<size_t>(p) * op.nt + t] += img[static_cast<size_t>(p)];
        }
    for (auto& v : out.data) v *= op.scale;
    return out;
}

// Density-compensated initial reconstruction A# y = AH_raw W y; the operator
// scale cancels so the intensity calibration comes from the weights alone.
inline CineImage apply_A_sharp(const EncodingOp& op, const KSpaceData& y) {
    detail::check_kspace(op, y, "apply_A_sharp");
    KSpaceData wy(y.nc, y.nt, y.m);
    for (int c = 0; c < op.nc; ++c)
        for (int t = 0; t < op.nt; ++t) {
            const float* w = op.dens.frame(t);
            const cfloat* src = y.frame(c, t);
            cfloat* dst = wy.frame(c, t);
            for (int64_t i = 0; i < y.m; ++i) dst[i] = src[i] * w[i];
        }
    CineImage out = apply_AH(op, wy);
    const float undo = 1.f / (op.scale * op.scale);
    for (auto& v : out.data) v *= undo;
    return out;
}

// H x = AH A x + lambda x.
inline CineImage apply_H(const EncodingOp& op, const CineImage& x, float lambda) {
    if (lambda < 0.f) throw std::invalid_argument("apply_H: lambda must be >= 0");
    CineImage out = apply_AH(op, apply_A(op, x));
    if (lambda != 0.f)
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += lambda * x.data[i];
    return out;
}

inline EncodingOp make_encoding_op(const Trajectory& traj, const CoilMaps& maps,
                                   const DensityWeights& dens, double osf = 2.0,
                                   int kernel_width = 4) {
    if (maps.nc <= 0) throw std::invalid_argument("make_encoding_op: need at least one coil");
    if (dens.n_frames != traj.n_frames || dens.samples_per_frame != traj.samples_per_frame())
        throw std::invalid_argument("make_encoding_op: density/trajectory mismatch");
    EncodingOp op;
    op.traj = traj;
    op.dens = dens;
    op.maps = maps;
    op.nx = maps.nx;
    op.ny = maps.ny;
    op.nt = traj.n_frames;
    op.nc = maps.nc;
    op.plans.reserve(static_cast<size_t>(traj.n_frames));
    for (int t = 0; t < traj.n_frames; ++t)
        op.plans.push_back(make_plan(op.nx, op.ny, traj.frame_coords(t),
                                     traj.samples_per_frame(), osf, kernel_width));

    // Power iteration on AH A (raw scale) to estimate the operator norm.
    std::mt19937 rng = make_rng(0x52414443u);  // fixed seed: op norm is deterministic
    std::uniform_real_distribution<float> d(-1.f, 1.f);
    CineImage v(op.nx, op.ny, op.nt);
    for (auto& z : v.data) z = cfloat(d(rng), d(rng));
    double norm_est = 1.0;
    for (int it = 0; it < 12; ++it) {
        CineImage w = apply_AH(op, apply_A(op, v));  // scale == 1 here
        double n2 = 0;
        for (const auto& z : w.data) n2 += std::norm(std::complex<double>(z));
        norm_est = std::sqrt(n2 / [&] {
            double vn = 0;
            for (const auto& z : v.data) vn += std::norm(std::complex<double>(z));
            return vn;
        }());
        const double inv = 1.0 / std::sqrt(n2);
        for (size_t i = 0; i < w.data.size(); ++i) v.data[i] = w.data[i] * static_cast<float>(inv);
    }
    op.scale = static_cast<float>(1.0 / std::sqrt(norm_est));
    return op;
}

// --- file formats -----------------------------------------------------------

inline void save_cine(const std::string& path, const CineImage& img) {
    io::json h;
    h["kind"] = "cine";
    h["nx"] = img.nx;
    h["ny"] = img.ny;
    h["nt"] = img.nt;
    h["dtype"] = "c64le";
    h["layout"] = "x-major, t fastest, interleaved (re, im)";
    std::vector<float> payload(static_cast<size_t>(img.numel()) * 2);
    std::memcpy(payload.data(), reinterpret_cast<const float*>(img.data.data()),
                payload.size() * sizeof(float));
    io::write_blob(path, h, payload);
}

inline CineImage load_cine(const std::string& path) {
    std::vector<float> payload;
    io::json h = io::read_blob(path, payload);
    if (h.value("kind", "") != "cine") throw FormatError("load_cine: wrong kind");
    CineImage img(h["nx"], h["ny"], h["nt"]);
    if (payload.size() != static_cast<size_t>(img.numel()) * 2)
        throw FormatError("load_cine: size mismatch");
    std::memcpy(reinterpret_cast<float*>(img.data.data()), payload.data(),
                payload.size() * sizeof(float));
    return img;
}

inline void save_coilmaps(const std::string& path, const CoilMaps& maps) {
    io::json h;
    h["kind"] = "coilmaps";
    h["n_c"] = maps.nc;
    h["nx"] = maps.nx;
    h["ny"] = maps.ny;
    h["dtype"] = "c64le";
    std::vector<float> payload(maps.maps.size() * 2);
    std::memcpy(payload.data(), reinterpret_cast<const float*>(maps.maps.data()),
                payload.size() * sizeof(float));
    io::write_blob(path, h, payload);
}

inline CoilMaps load_coilmaps(const std::string& path) {
    std::vector<float> payload;
    io::json h = io::read_blob(path, payload);
    if (h.value("kind", "") != "coilmaps") throw FormatError("load_coilmaps: wrong kind");
    CoilMaps maps;
    maps.nc = h["n_c"];
    maps.nx = h["nx"];
    maps.ny = h["ny"];
    maps.maps.resize(static_cast<size_t>(maps.nc) * maps.nx * maps.ny);
    if (payload.size() != maps.maps.size() * 2) throw FormatError("load_coilmaps: size mismatch");
    std::memcpy(reinterpret_cast<float*>(maps.maps.data()), payload.data(),
                payload.size() * sizeof(float));
    return maps;
}

inline void save_kspace(const std::string& path, const KSpaceData& y, const io::json& extra = {}) {
    io::json h;
    h["kind"] = "kspace";
    h["n_c"] = y.nc;
    h["n_t"] = y.nt;
    h["m"] = y.m;
    h["dtype"] = "c64le";
    if (!extra.empty()) h["meta"] = extra;
    std::vector<float> payload(y.data.size() * 2);
    std::memcpy(payload.data(), reinterpret_cast<const float*>(y.data.data()),
                payload.size() * sizeof(float));
    io::write_blob(path, h, payload);
}

inline KSpaceData load_kspace(const std::string& path, io::json* extra = nullptr) {
    std::vector<float> payload;
    io::json h = io::read_blob(path, payload);
    if (h.value("kind", "") != "kspace") throw FormatError("load_kspace: wrong kind");
    KSpaceData y(h["n_c"], h["n_t"], h["m"]);
    if (payload.size() != y.data.size() * 2) throw FormatError("load_kspace: size mismatch");
    std::memcpy(reinterpret_cast<float*>(y.data.data()), payload.data(),
                payload.size() * sizeof(float));
    if (extra && h.contains("meta")) *extra = h["meta"];
    return y;
}

}  // namespace radcine
