#include "radcine/baselines.hpp"

#include <gtest/gtest.h>

#include "radcine/simulation.hpp"

using namespace radcine;

namespace {

double nrmse(const CineImage& pred, const CineImage& gt) {
    double num = 0, den = 0;
    for (size_t i = 0; i < gt.data.size(); ++i) {
        num += std::norm(std::complex<double>(pred.data[i]) - std::complex<double>(gt.data[i]));
        den += std::norm(std::complex<double>(gt.data[i]));
    }
    return std::sqrt(num / den);
}

struct Problem {
    EncodingOp op;
    CineImage gt;
    KSpaceData y;
};

Problem make_problem(int nx, int nt, int nc, int spokes, double sigma, uint64_t seed) {
    Problem p;
    auto traj = golden_angle_trajectory(nx, nt, spokes, 2 * nx);
    auto dens = ramp_density(traj);
    auto maps = make_coil_maps(nx, nx, nc, seed);
    p.op = make_encoding_op(traj, maps, dens);
    PhantomConfig cfg;
    cfg.nx = cfg.ny = nx;
    cfg.nt = nt;
    cfg.seed = seed + 1;
    p.gt = make_phantom(cfg);
    p.y = simulate_acquisition(p.op, p.gt, sigma, seed + 2);
    return p;
}

}  // namespace

TEST(Baselines, ItSenseRecoversWellSampledPhantom) {
    auto p = make_problem(32, 2, 4, nyquist_spoke_count(32), 0.0, 31);
    CineImage rec = it_sense(p.op, p.y, 30);
    EXPECT_LT(nrmse(rec, p.gt), 0.03);
}

TEST(Baselines, RetrospectiveConsistencyLargeNTheta) {
    // sigma = 0 with generous spoke budget: the inverse crime closes to < 2%
    auto p = make_problem(32, 2, 2, 2 * nyquist_spoke_count(32), 0.0, 37);
    CineImage rec = it_sense(p.op, p.y, 40);
    EXPECT_LT(nrmse(rec, p.gt), 0.02);
}

TEST(Baselines, ItSenseSingleIterEqualsOneCgStep) {
    auto p = make_problem(16, 2, 2, 6, 0.02, 41);
    CineImage b = apply_AH(p.op, p.y);
    CineImage hb = apply_H(p.op, b, 0.f);
    double rs = 0, php = 0;
    for (size_t i = 0; i < b.data.size(); ++i) {
        rs += std::norm(std::complex<double>(b.data[i]));
        php += (std::complex<double>(b.data[i]) * std::conj(std::complex<double>(hb.data[i]))).real();
    }
    const float alpha = static_cast<float>(rs / php);
    CineImage rec = it_sense(p.op, p.y, 1);
    for (size_t i = 0; i < b.data.size(); ++i)
        EXPECT_LT(std::abs(rec.data[i] - alpha * b.data[i]), 1e-4f);
}

TEST(Baselines, ItSenseResidualMonotone) {
    auto p = make_problem(16, 2, 3, 8, 0.02, 43);
    std::vector<float> res;
    it_sense(p.op, p.y, 25, &res);
    ASSERT_GE(res.size(), 2u);
    for (size_t i = 1; i < res.size(); ++i) EXPECT_LE(res[i], res[i - 1] * (1.f + 1e-5f));
}

TEST(Baselines, ItSenseDeterministic) {
    auto p = make_problem(16, 2, 2, 6, 0.02, 47);
    CineImage a = it_sense(p.op, p.y, 10);
    CineImage b = it_sense(p.op, p.y, 10);
    for (size_t i = 0; i < a.data.size(); ++i) EXPECT_EQ(a.data[i], b.data[i]);
    EXPECT_THROW(it_sense(p.op, p.y, 0), std::invalid_argument);
}

TEST(Baselines, TvObjectiveMonotone) {
    auto p = make_problem(16, 4, 2, 5, 0.05, 53);
    std::vector<double> trace;
    tv_reconstruct(p.op, p.y, 0.05f, 15, 1e-6f, &trace);
    ASSERT_GE(trace.size(), 2u);
    for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-9);
}

TEST(Baselines, TvVanishingRegularizerApproachesLeastSquares) {
    auto p = make_problem(16, 2, 2, 10, 0.0, 59);
    CineImage rec = tv_reconstruct(p.op, p.y, 1e-6f, 60);
    // noiseless: the data term of the solution must be nearly closed
    KSpaceData ax = apply_A(p.op, rec);
    double num = 0, den = 0;
    for (size_t i = 0; i < ax.data.size(); ++i) {
        num += std::norm(std::complex<double>(ax.data[i]) - std::complex<double>(p.y.data[i]));
        den += std::norm(std::complex<double>(p.y.data[i]));
    }
    EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(Baselines, TvBeatsItSenseOnNoisyPiecewiseConstantPhantom) {
    auto p = make_problem(32, 4, 4, 8, 0.05, 61);
    CineImage sense = it_sense(p.op, p.y, 15);
    CineImage tv = tv_reconstruct(p.op, p.y, 0.08f, 40);
    EXPECT_LT(nrmse(tv, p.gt), nrmse(sense, p.gt));
}

TEST(Baselines, TvRejectsBadArgs) {
    auto p = make_problem(16, 2, 2, 5, 0.02, 67);
    EXPECT_THROW(tv_reconstruct(p.op, p.y, 0.f, 5), std::invalid_argument);
    EXPECT_THROW(tv_reconstruct(p.op, p.y, 0.1f, 0), std::invalid_argument);
    EXPECT_THROW(tv_reconstruct(p.op, p.y, 0.1f, 5, 0.f), std::invalid_argument);
}
