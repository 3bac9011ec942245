#include "radcine/cnn_block.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "radcine/checkpoint.hpp"
#include "testutil.hpp"

using namespace radcine;
using testutil::random_tensor;

TEST(UNet, DefaultParameterCount) {
    ParamSet ps = make_param_set(UNetConfig{}, 1);
    EXPECT_EQ(ps.weight_count(), 92786);
    EXPECT_EQ(ps.param_count(), 92787);  // + lambda_raw
}

TEST(UNet, OutputShapeEqualsInputShape) {
    ParamSet ps = make_param_set(UNetConfig{}, 2);
    std::mt19937 rng(3);
    for (auto [h, w] : {std::pair{16, 8}, std::pair{8, 16}, std::pair{24, 12}}) {
        Tensor x = random_tensor({3, 2, h, w}, rng);
        Tensor y = unet_forward(ps, x);
        EXPECT_EQ(y.shape(), (Shape{3, 2, h, w}));
    }
}

TEST(UNet, ZeroFinalLayerGivesZeroOutput) {
    ParamSet ps = make_param_set(UNetConfig{}, 4);
    std::fill_n(ps.find("out.weight").mutable_data(), ps.find("out.weight").numel(), 0.f);
    std::fill_n(ps.find("out.bias").mutable_data(), ps.find("out.bias").numel(), 0.f);
    std::mt19937 rng(5);
    Tensor x = random_tensor({2, 2, 8, 8}, rng);
    Tensor y = unet_forward(ps, x);
    for (int64_t i = 0; i < y.numel(); ++i) EXPECT_EQ(y.data()[i], 0.f);
}

TEST(UNet, RejectsIndivisibleDims) {
    ParamSet ps = make_param_set(UNetConfig{}, 6);
    Tensor bad({1, 2, 10, 8});
    EXPECT_THROW(unet_forward(ps, bad), std::invalid_argument);
}

TEST(UNet, GradcheckSmallInput) {
    UNetConfig cfg;
    cfg.n_f = 4;  // keep the finite-difference loop cheap
    ParamSet ps = make_param_set(cfg, 7);
    std::mt19937 rng(11);
    Tensor x = random_tensor({1, 2, 8, 8}, rng);
    const double err = testutil::max_grad_rel_err(
        [&]() {
            Tensor y = unet_forward(ps, x);
            return dot(y, y);
        },
        {x, ps.find("enc0.conv0.weight"), ps.find("dec0.conv1.bias"),
         ps.find("bridge.conv0.weight")},
        rng, 4);
    EXPECT_LT(err, 1e-2);
}

TEST(Block, TemporalMeanStack) {
    std::mt19937 rng(13);
    Tensor x = random_tensor({4, 4, 8, 2}, rng);
    Tensor mu = temporal_mean_stack(x);
    EXPECT_EQ(mu.shape(), x.shape());
    // x - mu has zero temporal mean per pixel
    Tensor d = sub(x, mu);
    for (int ix = 0; ix < 4; ++ix)
        for (int iy = 0; iy < 4; ++iy)
            for (int c = 0; c < 2; ++c) {
                double acc = 0;
                for (int t = 0; t < 8; ++t)
                    acc += d.data()[((ix * 4 + iy) * 8 + t) * 2 + c];
                EXPECT_NEAR(acc, 0.0, 1e-5);
            }
    // static cine: mean equals input
    Tensor s({2, 2, 4, 2});
    for (int p = 0; p < 4; ++p)
        for (int t = 0; t < 4; ++t)
            for (int c = 0; c < 2; ++c)
                s.mutable_data()[(p * 4 + t) * 2 + c] = static_cast<float>(p + c);
    Tensor ms = temporal_mean_stack(s);
    for (int64_t i = 0; i < s.numel(); ++i) EXPECT_FLOAT_EQ(ms.data()[i], s.data()[i]);
    // single frame: identity
    std::mt19937 rng2(17);
    Tensor one = random_tensor({3, 3, 1, 2}, rng2);
    Tensor m1 = temporal_mean_stack(one);
    for (int64_t i = 0; i < one.numel(); ++i) EXPECT_FLOAT_EQ(m1.data()[i], one.data()[i]);
}

TEST(Block, XtYtShapesAndRoundTrip) {
    std::mt19937 rng(19);
    Tensor z = random_tensor({64, 64, 16, 2}, rng);
    Tensor xt = to_xt(z), yt = to_yt(z);
    EXPECT_EQ(xt.shape(), (Shape{64, 2, 64, 16}));
    EXPECT_EQ(yt.shape(), (Shape{64, 2, 64, 16}));
    Tensor back_x = from_xt(xt), back_y = from_yt(yt);
    for (int64_t i = 0; i < z.numel(); ++i) {
        EXPECT_EQ(back_x.data()[i], z.data()[i]);
        EXPECT_EQ(back_y.data()[i], z.data()[i]);
    }
    // permutation preserves the value multiset (spot-check via sums)
    double sz = 0, sx = 0;
    for (int64_t i = 0; i < z.numel(); ++i) {
        sz += z.data()[i];
        sx += xt.data()[i];
    }
    EXPECT_NEAR(sz, sx, 1e-3);
}

TEST(Block, NonSquareShapes) {
    std::mt19937 rng(23);
    Tensor z = random_tensor({16, 24, 8, 2}, rng);
    Tensor xt = to_xt(z), yt = to_yt(z);
    EXPECT_EQ(xt.shape(), (Shape{24, 2, 16, 8}));
    EXPECT_EQ(yt.shape(), (Shape{16, 2, 24, 8}));
}

TEST(Block, IdentityProcessorIsGlobalIdentity) {
    std::mt19937 rng(29);
    for (auto dims : {Shape{16, 16, 8, 2}, Shape{16, 24, 8, 2}}) {
        Tensor x = random_tensor(dims, rng);
        Tensor y = block_forward_with(x, [](const Tensor& s) { return s; });
        double worst = 0;
        for (int64_t i = 0; i < x.numel(); ++i)
            worst = std::max<double>(worst, std::abs(y.data()[i] - x.data()[i]));
        EXPECT_LT(worst, 1e-5);
    }
}

TEST(Block, ZeroProcessorGivesTemporalAverage) {
    std::mt19937 rng(31);
    Tensor x = random_tensor({8, 8, 4, 2}, rng);
    Tensor y = block_forward_with(x, [](const Tensor& s) { return scale(s, 0.f); });
    Tensor mu = temporal_mean_stack(x);
    for (int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(y.data()[i], mu.data()[i], 1e-5);
}

TEST(Block, OutputShapePreservedAndFiniteWithUNet) {
    UNetConfig cfg;
    cfg.n_f = 4;
    ParamSet ps = make_param_set(cfg, 37);
    std::mt19937 rng(41);
    Tensor x = random_tensor({16, 24, 8, 2}, rng);
    Tensor y = block_forward(x, ps);
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_TRUE(y.all_finite());
}

TEST(Block, WeightSharingBetweenBranches) {
    // both branches read the same parameter buffers: perturbing one tensor
    // changes both branch outputs; and the buffers are literally shared
    ParamSet ps = make_param_set(UNetConfig{}, 43);
    const Tensor& w1 = ps.find("enc0.conv0.weight");
    const Tensor& w2 = ps.find("enc0.conv0.weight");
    EXPECT_EQ(w1.impl().get(), w2.impl().get());
}

TEST(Block, GradcheckThroughFullBlock) {
    UNetConfig cfg;
    cfg.n_f = 4;
    ParamSet ps = make_param_set(cfg, 47);
    std::mt19937 rng(53);
    Tensor x = random_tensor({16, 16, 8, 2}, rng, -0.5f, 0.5f);
    Tensor target = random_tensor({16, 16, 8, 2}, rng, -0.5f, 0.5f);
    // random 10-weight subset: probe a few tensors spanning the net
    const double err = testutil::max_grad_rel_err(
        [&]() {
            Tensor d = sub(block_forward(x, ps), target);
            return dot(d, d);
        },
        {ps.find("enc0.conv0.weight"), ps.find("enc1.conv1.bias"), ps.find("up1.conv.weight"),
         ps.find("dec0.conv0.weight"), ps.find("out.weight")},
        rng, 2);
    EXPECT_LT(err, 1e-2);
}

TEST(Checkpoint, RoundTripReproducesForward) {
    UNetConfig cfg;
    cfg.n_f = 8;
    ParamSet ps = make_param_set(cfg, 59);
    ps.lambda_raw.mutable_data()[0] = -0.37f;
    const std::string path =
        (std::filesystem::temp_directory_path() / "radcine_ckpt_test.radw").string();
    save_checkpoint(path, ps);
    ParamSet back = load_checkpoint(path);
    EXPECT_EQ(back.cfg.n_f, 8);
    EXPECT_FLOAT_EQ(back.lambda_raw.item(), -0.37f);
    ASSERT_EQ(back.weights.size(), ps.weights.size());
    for (size_t i = 0; i < ps.weights.size(); ++i) {
        EXPECT_EQ(back.weights[i].first, ps.weights[i].first);
        for (int64_t j = 0; j < ps.weights[i].second.numel(); ++j)
            EXPECT_EQ(back.weights[i].second.data()[j], ps.weights[i].second.data()[j]);
    }
    std::mt19937 rng(61);
    Tensor x = random_tensor({8, 8, 4, 2}, rng);
    Tensor ya = block_forward(x, ps);
    Tensor yb = block_forward(x, back);
    for (int64_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya.data()[i], yb.data()[i]);
    std::filesystem::remove(path);
    EXPECT_THROW(load_checkpoint(path), std::runtime_error);
}
