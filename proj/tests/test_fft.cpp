#include "radcine/fft.hpp"

#include <gtest/gtest.h>

#include <random>

#include "testutil.hpp"

using namespace radcine;

namespace {

std::vector<cfloat> random_signal(int n, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> d(-1.f, 1.f);
    std::vector<cfloat> x(static_cast<size_t>(n));
    for (auto& v : x) v = cfloat(d(rng), d(rng));
    return x;
}

double max_abs_err(const std::vector<cfloat>& got, const std::vector<std::complex<double>>& want) {
    double m = 0;
    for (size_t i = 0; i < got.size(); ++i)
        m = std::max(m, std::abs(std::complex<double>(got[i]) - want[i]));
    return m;
}

}  // namespace

TEST(Fft, MatchesNaiveDftPow2) {
    for (int n : {2, 8, 64, 256}) {
        auto x = random_signal(n, 31u + static_cast<uint32_t>(n));
        std::vector<std::complex<double>> xd(x.begin(), x.end());
        auto want = testutil::naive_dft(xd, false);
        FftPlan1d plan(n);
        auto got = x;
        plan.exec(got.data(), false);
        EXPECT_LT(max_abs_err(got, want), 1e-3 * std::sqrt(n)) << "n=" << n;
    }
}

TEST(Fft, MatchesNaiveDftNonPow2) {
    for (int n : {3, 12, 48, 96, 192}) {
        auto x = random_signal(n, 77u + static_cast<uint32_t>(n));
        std::vector<std::complex<double>> xd(x.begin(), x.end());
        auto want = testutil::naive_dft(xd, false);
        FftPlan1d plan(n);
        auto got = x;
        plan.exec(got.data(), false);
        EXPECT_LT(max_abs_err(got, want), 1e-3 * std::sqrt(n)) << "n=" << n;
    }
}

TEST(Fft, InverseMatchesNaive) {
    for (int n : {8, 48}) {
        auto x = random_signal(n, 5u + static_cast<uint32_t>(n));
        std::vector<std::complex<double>> xd(x.begin(), x.end());
        auto want = testutil::naive_dft(xd, true);
        FftPlan1d plan(n);
        auto got = x;
        plan.exec(got.data(), true);
        EXPECT_LT(max_abs_err(got, want), 1e-3 * std::sqrt(n)) << "n=" << n;
    }
}

TEST(Fft, RoundTripIsNTimesIdentity) {
    for (int n : {16, 64, 96}) {
        auto x = random_signal(n, 9u + static_cast<uint32_t>(n));
        auto y = x;
        FftPlan1d plan(n);
        plan.exec(y.data(), false);
        plan.exec(y.data(), true);
        double m = 0;
        for (int i = 0; i < n; ++i)
            m = std::max<double>(m, std::abs(y[static_cast<size_t>(i)] - x[static_cast<size_t>(i)] * static_cast<float>(n)));
        EXPECT_LT(m, 1e-4 * n) << "n=" << n;
    }
}

TEST(Fft, Fft2dMatchesSeparableNaive) {
    const int n0 = 6, n1 = 8;
    auto x = random_signal(n0 * n1, 123);
    std::vector<cfloat> got = x;
    FftPlan1d p0(n0), p1(n1);
    fft_2d(got.data(), n0, n1, p0, p1, false);

    // reference: row transforms then column transforms in double
    std::vector<std::complex<double>> ref(x.begin(), x.end());
    for (int i = 0; i < n0; ++i) {
        std::vector<std::complex<double>> row(ref.begin() + i * n1, ref.begin() + (i + 1) * n1);
        auto t = testutil::naive_dft(row, false);
        std::copy(t.begin(), t.end(), ref.begin() + i * n1);
    }
    for (int j = 0; j < n1; ++j) {
        std::vector<std::complex<double>> col(static_cast<size_t>(n0));
        for (int i = 0; i < n0; ++i) col[static_cast<size_t>(i)] = ref[static_cast<size_t>(i * n1 + j)];
        auto t = testutil::naive_dft(col, false);
        for (int i = 0; i < n0; ++i) ref[static_cast<size_t>(i * n1 + j)] = t[static_cast<size_t>(i)];
    }
    EXPECT_LT(max_abs_err(got, ref), 2e-3 * std::sqrt(n0 * n1));
}

TEST(Fft, RejectsBadLength) {
    EXPECT_THROW(FftPlan1d(0), std::invalid_argument);
    EXPECT_THROW(FftPlan1d(-4), std::invalid_argument);
}
