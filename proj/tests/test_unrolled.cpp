#include "radcine/unrolled.hpp"

#include <gtest/gtest.h>

#include "radcine/simulation.hpp"

using namespace radcine;

namespace {

EncodingOp small_op(int nx, int nt, int nc, int spokes, uint64_t seed = 5) {
    auto traj = golden_angle_trajectory(nx, nt, spokes, 2 * nx);
    auto dens = ramp_density(traj);
    auto maps = make_coil_maps(nx, nx, nc, seed);
    return make_encoding_op(traj, maps, dens);
}

}  // namespace

TEST(Unrolled, SoftplusLambda) {
    ParamSet ps = make_param_set(UNetConfig{}, 1);
    ps.lambda_raw.mutable_data()[0] = 0.f;
    EXPECT_NEAR(lambda_of(ps), std::log(2.0), 1e-6);
    // positivity across the float range
    for (float v : {-50.f, 0.f, 50.f}) {
        ps.lambda_raw.mutable_data()[0] = v;
        EXPECT_GT(lambda_of(ps), 0.f);
    }
    // strictly increasing
    float prev = -1.f;
    for (float v : {-8.f, -2.f, 0.f, 1.f, 4.f}) {
        ps.lambda_raw.mutable_data()[0] = v;
        EXPECT_GT(lambda_of(ps), prev);
        prev = lambda_of(ps);
    }
}

TEST(Unrolled, IdentityCnnLargeLambdaReturnsInitialRecon) {
    auto op = small_op(16, 4, 2, 8);
    PhantomConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.nt = 4;
    cfg.seed = 3;
    CineImage gt = make_phantom(cfg);
    KSpaceData y = simulate_acquisition(op, gt, 0.0, 7);
    CineImage x_i = apply_A_sharp(op, y);

    ParamSet ps = make_param_set(UNetConfig{}, 9);
    ps.lambda_raw.mutable_data()[0] = 1e6f;  // softplus(1e6) = 1e6
    CgConfig cg;
    cg.n_cg = 6;
    ReconstructOptions opts;
    opts.identity_cnn = true;
    CineImage rec = reconstruct(op, y, ps, 1, cg, opts);
    double num = 0, den = 0;
    for (size_t i = 0; i < x_i.data.size(); ++i) {
        num += std::norm(std::complex<double>(rec.data[i]) - std::complex<double>(x_i.data[i]));
        den += std::norm(std::complex<double>(x_i.data[i]));
    }
    EXPECT_LT(std::sqrt(num / den), 1e-3);
}

TEST(Unrolled, DeterministicRepeat) {
    auto op = small_op(16, 4, 2, 6);
    PhantomConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.nt = 4;
    cfg.seed = 11;
    CineImage gt = make_phantom(cfg);
    KSpaceData y = simulate_acquisition(op, gt, 0.02, 13);
    UNetConfig ucfg;
    ucfg.n_f = 4;
    ParamSet ps = make_param_set(ucfg, 15);
    CgConfig cg;
    cg.n_cg = 3;
    CineImage a = reconstruct(op, y, ps, 2, cg);
    CineImage b = reconstruct(op, y, ps, 2, cg);
    for (size_t i = 0; i < a.data.size(); ++i) EXPECT_EQ(a.data[i], b.data[i]);
}

TEST(Unrolled, InferenceMemoryIndependentOfM) {
    auto op = small_op(16, 4, 2, 6);
    PhantomConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.nt = 4;
    cfg.seed = 17;
    CineImage gt = make_phantom(cfg);
    KSpaceData y = simulate_acquisition(op, gt, 0.0, 19);
    UNetConfig ucfg;
    ucfg.n_f = 4;
    ParamSet ps = make_param_set(ucfg, 21);
    CgConfig cg;
    cg.n_cg = 2;

    auto peak_for = [&](int m) {
        reconstruct(op, y, ps, 1, cg);  // warm caches
        TensorAlloc::reset_peak();
        reconstruct(op, y, ps, m, cg);
        return TensorAlloc::peak().load();
    };
    const int64_t p1 = peak_for(1);
    const int64_t p6 = peak_for(6);
    EXPECT_LT(p6, static_cast<int64_t>(1.5 * static_cast<double>(p1)));
}

TEST(Unrolled, ParallelModeMatchesSequential) {
    auto op = small_op(16, 4, 3, 6);
    PhantomConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.nt = 4;
    cfg.seed = 23;
    CineImage gt = make_phantom(cfg);
    KSpaceData y = simulate_acquisition(op, gt, 0.02, 29);
    UNetConfig ucfg;
    ucfg.n_f = 4;
    ParamSet ps = make_param_set(ucfg, 31);
    CgConfig cg;
    cg.n_cg = 3;

    set_thread_count(1);
    CineImage seq = reconstruct(op, y, ps, 1, cg);
    set_thread_count(2);
    CineImage par = reconstruct(op, y, ps, 1, cg);
    set_thread_count(1);
    double worst = 0, scale = 0;
    for (size_t i = 0; i < seq.data.size(); ++i) {
        worst = std::max<double>(worst, std::abs(seq.data[i] - par.data[i]));
        scale = std::max<double>(scale, std::abs(seq.data[i]));
    }
    EXPECT_LT(worst, 1e-5 * std::max(scale, 1.0));
}

TEST(Unrolled, RejectsBadM) {
    auto op = small_op(16, 4, 2, 6);
    KSpaceData y(2, 4, op.samples_per_frame());
    ParamSet ps = make_param_set(UNetConfig{}, 33);
    CgConfig cg;
    EXPECT_THROW(reconstruct(op, y, ps, 0, cg), std::invalid_argument);
}
