#include "radcine/dc_cg.hpp"

#include <gtest/gtest.h>

#include <random>

#include "radcine/simulation.hpp"
#include "testutil.hpp"

using namespace radcine;

namespace {

CoilMaps unit_coil(int nx, int ny) {
    CoilMaps m;
    m.nc = 1;
    m.nx = nx;
    m.ny = ny;
    m.maps.assign(static_cast<size_t>(nx) * ny, cfloat(1.f, 0.f));
    return m;
}

EncodingOp make_op(int nx, int nt, int nc, int spokes, uint64_t seed = 3) {
    auto traj = golden_angle_trajectory(nx, nt, spokes, 2 * nx);
    auto dens = ramp_density(traj);
    auto maps = nc == 1 ? unit_coil(nx, nx) : make_coil_maps(nx, nx, nc, seed);
    return make_encoding_op(traj, maps, dens);
}

CineImage random_image(int nx, int ny, int nt, uint32_t seed) {
    CineImage img(nx, ny, nt);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> d(-1.f, 1.f);
    for (auto& v : img.data) v = cfloat(d(rng), d(rng));
    return img;
}

// dense complex solve via partial-pivot Gaussian elimination (double)
std::vector<std::complex<double>> dense_solve(std::vector<std::complex<double>> a,
                                              std::vector<std::complex<double>> b, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[static_cast<size_t>(row) * n + col]) >
                std::abs(a[static_cast<size_t>(piv) * n + col]))
                piv = row;
        if (piv != col) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(col) * n + j], a[static_cast<size_t>(piv) * n + j]);
            std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(piv)]);
        }
        const std::complex<double> d = a[static_cast<size_t>(col) * n + col];
        for (int row = col + 1; row < n; ++row) {
            const std::complex<double> f = a[static_cast<size_t>(row) * n + col] / d;
            if (f == std::complex<double>(0, 0)) continue;
            for (int j = col; j < n; ++j)
                a[static_cast<size_t>(row) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
            b[static_cast<size_t>(row)] -= f * b[static_cast<size_t>(col)];
        }
    }
    std::vector<std::complex<double>> x(static_cast<size_t>(n));
    for (int row = n - 1; row >= 0; --row) {
        std::complex<double> acc = b[static_cast<size_t>(row)];
        for (int j = row + 1; j < n; ++j)
            acc -= a[static_cast<size_t>(row) * n + j] * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(row)] = acc / a[static_cast<size_t>(row) * n + row];
    }
    return x;
}

}  // namespace

TEST(DcCg, LargeLambdaReturnsPrior) {
    auto op = make_op(12, 2, 2, 5);
    CineImage x_cnn = random_image(12, 12, 2, 7);
    CineImage ah_y = random_image(12, 12, 2, 9);
    CgConfig cfg;
    cfg.n_cg = 8;
    CineImage x = solve_dc(op, x_cnn, ah_y, 1e6f, cfg);
    double num = 0, den = 0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        num += std::norm(std::complex<double>(x.data[i]) - std::complex<double>(x_cnn.data[i]));
        den += std::norm(std::complex<double>(x_cnn.data[i]));
    }
    EXPECT_LT(std::sqrt(num / den), 1e-3);
}

TEST(DcCg, MatchesDenseSolveOnTinyProblem) {
    const int nx = 8;
    auto op = make_op(nx, 1, 1, 4);
    const float lambda = 0.1f;
    const int n = nx * nx;

    // materialize H column by column via basis vectors
    std::vector<std::complex<double>> hmat(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        CineImage e(nx, nx, 1);
        e.data[static_cast<size_t>(j)] = cfloat(1.f, 0.f);
        CineImage he = apply_H(op, e, lambda);
        for (int i = 0; i < n; ++i)
            hmat[static_cast<size_t>(i) * n + j] = std::complex<double>(he.data[static_cast<size_t>(i)]);
    }
    CineImage x_cnn = random_image(nx, nx, 1, 11);
    CineImage ah_y = random_image(nx, nx, 1, 13);
    std::vector<std::complex<double>> b(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        b[static_cast<size_t>(i)] = std::complex<double>(ah_y.data[static_cast<size_t>(i)]) +
                                    static_cast<double>(lambda) *
                                        std::complex<double>(x_cnn.data[static_cast<size_t>(i)]);
    auto want = dense_solve(hmat, b, n);

    CgConfig cfg;
    cfg.n_cg = 64;
    CineImage got = solve_dc(op, x_cnn, ah_y, lambda, cfg);
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        num += std::norm(std::complex<double>(got.data[static_cast<size_t>(i)]) - want[static_cast<size_t>(i)]);
        den += std::norm(want[static_cast<size_t>(i)]);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-4);
}

TEST(DcCg, ResidualsMonotoneWithinSlack) {
    auto op = make_op(16, 2, 2, 6);
    CineImage x_cnn = random_image(16, 16, 2, 17);
    CineImage ah_y = random_image(16, 16, 2, 19);
    CgConfig cfg;
    cfg.n_cg = 20;
    cfg.record_residuals = true;
    std::vector<float> res;
    solve_dc(op, x_cnn, ah_y, 0.5f, cfg, &res);
    ASSERT_EQ(res.size(), 21u);
    for (size_t i = 1; i < res.size(); ++i) EXPECT_LE(res[i], res[i - 1] + 1e-6f);
}

TEST(DcCg, DeskProblemResidualBelow1em5Within50) {
    auto op = make_op(64, 12, 4, 16, 5);
    CineImage x_cnn = random_image(64, 64, 12, 23);
    CineImage ah_y = random_image(64, 64, 12, 29);
    CgConfig cfg;
    cfg.n_cg = 50;
    cfg.record_residuals = true;
    std::vector<float> res;
    solve_dc(op, x_cnn, ah_y, 0.1f, cfg, &res);
    EXPECT_LT(res.back(), 1e-5f);
}

TEST(DcCg, BitwiseDeterministicSingleThread) {
    auto op = make_op(12, 2, 2, 5);
    CineImage x_cnn = random_image(12, 12, 2, 31);
    CineImage ah_y = random_image(12, 12, 2, 37);
    CgConfig cfg;
    cfg.n_cg = 6;
    CineImage a = solve_dc(op, x_cnn, ah_y, 0.4f, cfg);
    CineImage b = solve_dc(op, x_cnn, ah_y, 0.4f, cfg);
    for (size_t i = 0; i < a.data.size(); ++i) EXPECT_EQ(a.data[i], b.data[i]);
}

TEST(DcCg, TolStoppingTruncatesAtTestTime) {
    auto op = make_op(12, 1, 1, 5);
    CineImage x_cnn = random_image(12, 12, 1, 41);
    CineImage ah_y = random_image(12, 12, 1, 43);
    CgConfig cfg;
    cfg.n_cg = 50;
    cfg.tol = 1e-2f;
    cfg.record_residuals = true;
    std::vector<float> res;
    solve_dc(op, x_cnn, ah_y, 0.5f, cfg, &res);
    EXPECT_LT(res.size(), 51u);
    EXPECT_LE(res.back(), 1e-2f);
}

TEST(DcCg, TolWithGradientsThrows) {
    auto op = make_op(8, 1, 1, 4);
    Tensor x = to_tensor(random_image(8, 8, 1, 47));
    Tensor ah = to_tensor(random_image(8, 8, 1, 53));
    Tensor lam = Tensor::scalar(0.5f);
    x.set_requires_grad(true);
    CgConfig cfg;
    cfg.n_cg = 4;
    cfg.tol = 1e-3f;
    EXPECT_THROW(solve_dc(op, x, ah, lam, cfg), std::logic_error);
}

TEST(DcCg, RejectsNonPositiveLambda) {
    auto op = make_op(8, 1, 1, 4);
    CineImage x_cnn = random_image(8, 8, 1, 59);
    CineImage ah_y = random_image(8, 8, 1, 61);
    CgConfig cfg;
    EXPECT_THROW(solve_dc(op, x_cnn, ah_y, 0.f, cfg), std::invalid_argument);
    EXPECT_THROW(solve_dc(op, x_cnn, ah_y, -0.5f, cfg), std::invalid_argument);
    CgConfig bad;
    bad.n_cg = 0;
    EXPECT_THROW(solve_dc(op, x_cnn, ah_y, 0.5f, bad), std::invalid_argument);
}

TEST(DcCg, GradientThroughCgMatchesFiniteDifferences) {
    auto op = make_op(8, 1, 2, 4);
    Tensor x_cnn = to_tensor(random_image(8, 8, 1, 67));
    Tensor ah_y = to_tensor(random_image(8, 8, 1, 71));
    Tensor lam = Tensor::scalar(0.6f);
    Tensor target = to_tensor(random_image(8, 8, 1, 73));
    CgConfig cfg;
    cfg.n_cg = 4;

    std::mt19937 rng(79);
    const double err = testutil::max_grad_rel_err(
        [&]() {
            Tensor x = solve_dc(op, x_cnn, ah_y, lam, cfg);
            Tensor d = sub(x, target);
            return dot(d, d);
        },
        {x_cnn, ah_y, lam}, rng, 6, 1e-2);
    EXPECT_LT(err, 1e-2);
}

TEST(DcCg, HOpGradcheck) {
    auto op = make_op(8, 1, 1, 4);
    Tensor x = to_tensor(random_image(8, 8, 1, 83));
    Tensor lam = Tensor::scalar(0.3f);
    std::mt19937 rng(89);
    const double err = testutil::max_grad_rel_err(
        [&]() {
            Tensor hx = apply_h_op(op, x, lam);
            return dot(hx, hx);
        },
        {x, lam}, rng, 6, 1e-2);
    EXPECT_LT(err, 1e-2);
}
