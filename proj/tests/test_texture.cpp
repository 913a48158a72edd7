#include <gtest/gtest.h>

#include "s4dgs/rng.hpp"
#include "s4dgs/texture.hpp"
#include "testutil.hpp"

using namespace s4dgs;

TEST(Luminance, Weights) {
    Image<double> rgb(1, 3, 3);
    // white, red, gray 0.4
    rgb.at(0, 0, 0) = rgb.at(0, 0, 1) = rgb.at(0, 0, 2) = 1.0;
    rgb.at(0, 1, 0) = 1.0;
    rgb.at(0, 2, 0) = rgb.at(0, 2, 1) = rgb.at(0, 2, 2) = 0.4;
    Image<double> y = luminance(rgb);
    EXPECT_DOUBLE_EQ(y.at(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(y.at(0, 1), 0.299);
    EXPECT_DOUBLE_EQ(y.at(0, 2), 0.4);
}

TEST(Sobel, ConstantImageIsZero) {
    Image<double> img(5, 6, 1, 3.7);
    auto ti = sobel_ti(img);
    for (double v : ti.values.data) EXPECT_EQ(v, 0.0);
}

TEST(Sobel, HorizontalRampInteriorIsExactlyEight) {
    Image<double> img(7, 9, 1);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 9; ++j) img.at(i, j) = double(j);
    auto ti = sobel_ti(img);
    for (int i = 1; i < 6; ++i)
        for (int j = 1; j < 8; ++j) EXPECT_EQ(ti.values.at(i, j), 8.0);
}

TEST(Sobel, VerticalRampInteriorIsExactlyEight) {
    Image<double> img(9, 7, 1);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 7; ++j) img.at(i, j) = double(i);
    auto ti = sobel_ti(img);
    for (int i = 1; i < 8; ++i)
        for (int j = 1; j < 6; ++j) EXPECT_EQ(ti.values.at(i, j), 8.0);
}

TEST(Sobel, SingleBrightPixelMatchesOracleExactly) {
    Image<double> img(7, 7, 1);
    img.at(3, 3) = 1.0;
    auto ti = sobel_ti(img);
    auto want = testutil::sobel_oracle(img);
    for (size_t i = 0; i < want.data.size(); ++i) EXPECT_EQ(ti.values.data[i], want.data[i]);
    // 4-neighbors see the single center tap (weight 2), diagonals sqrt(1+1)
    EXPECT_DOUBLE_EQ(ti.values.at(3, 2), 2.0);
    EXPECT_DOUBLE_EQ(ti.values.at(2, 3), 2.0);
    EXPECT_DOUBLE_EQ(ti.values.at(2, 2), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(ti.values.at(3, 3), 0.0);
}

TEST(Sobel, MatchesOracleBitForBitOnRandomImages) {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        Image<double> img(11, 13, 1);
        for (auto& v : img.data) v = rng.uniform(-2.0, 5.0);
        auto ti = sobel_ti(img);
        auto want = testutil::sobel_oracle(img);
        for (size_t i = 0; i < want.data.size(); ++i) EXPECT_EQ(ti.values.data[i], want.data[i]);
    }
}

TEST(Sobel, TranslationInvarianceAndHomogeneity) {
    Rng rng(5);
    Image<double> img(8, 8, 1);
    for (auto& v : img.data) v = rng.uniform(0.0, 1.0);
    auto base = sobel_ti(img);
    Image<double> shifted = img, scaled = img;
    for (auto& v : shifted.data) v += 11.25;
    for (auto& v : scaled.data) v *= 3.5;
    auto ti_shift = sobel_ti(shifted);
    auto ti_scale = sobel_ti(scaled);
    for (size_t i = 0; i < base.values.data.size(); ++i) {
        EXPECT_NEAR(ti_shift.values.data[i], base.values.data[i], 1e-12);
        EXPECT_NEAR(ti_scale.values.data[i], 3.5 * base.values.data[i], 1e-12);
    }
}

TEST(Sobel, RejectsTinyImages) {
    Image<double> img(2, 5, 1);
    EXPECT_THROW(sobel_ti(img), std::invalid_argument);
}

TEST(DepthTi, ConstantPlaneZeroAndStepIsFourH) {
    Image<double> plane(6, 6, 1, 4.2);
    auto flat = ti_of_depth(plane);
    for (double v : flat.values.data) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(flat.source, TextureSource::depth_derived);

    // step of height h between two constant half-planes, split at column 3
    double h = 0.75;
    Image<double> step(7, 8, 1, 1.0);
    for (int i = 0; i < 7; ++i)
        for (int j = 3; j < 8; ++j) step.at(i, j) = 1.0 + h;
    auto ti = ti_of_depth(step);
    // interior columns adjacent to the step see the full kernel column sum
    for (int i = 1; i < 6; ++i) {
        EXPECT_NEAR(ti.values.at(i, 2), 4.0 * h, 1e-12);
        EXPECT_NEAR(ti.values.at(i, 3), 4.0 * h, 1e-12);
    }
}

TEST(DepthTi, AffineRemapScalesByA) {
    Rng rng(8);
    Image<double> depth(9, 9, 1);
    for (auto& v : depth.data) v = rng.uniform(2.0, 6.0);
    auto base = ti_of_depth(depth);
    double a = 1.7, b = -3.0;
    Image<double> remapped = depth;
    for (auto& v : remapped.data) v = a * v + b;
    auto ti = ti_of_depth(remapped);
    for (size_t i = 0; i < base.values.data.size(); ++i)
        EXPECT_NEAR(ti.values.data[i], a * base.values.data[i], 1e-10);
}

TEST(SobelBackward, MatchesFiniteDifferencesAwayFromKinks) {
    Rng rng(21);
    Image<double> img(6, 7, 1);
    for (auto& v : img.data) v = rng.uniform(0.0, 1.0);
    Image<double> weights(6, 7, 1);
    for (auto& v : weights.data) v = rng.uniform(-1.0, 1.0);

    auto probe = [&]() {
        auto ti = sobel_ti(img);
        double acc = 0;
        for (size_t i = 0; i < ti.values.data.size(); ++i)
            acc += ti.values.data[i] * weights.data[i];
        return acc;
    };
    SobelRecord<double> rec;
    sobel_ti(img, &rec);
    Image<double> grad = sobel_ti_backward(rec, weights);

    const double h = 1e-6;
    for (size_t i = 0; i < img.data.size(); ++i) {
        double orig = img.data[i];
        img.data[i] = orig + h;
        double fp = probe();
        img.data[i] = orig - h;
        double fm = probe();
        img.data[i] = orig;
        double fd = (fp - fm) / (2 * h);
        EXPECT_NEAR(grad.data[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST(RgbReduction, ModesDiffer) {
    Rng rng(2);
    Image<double> rgb(6, 6, 3);
    for (auto& v : rgb.data) v = rng.uniform(0.0, 1.0);
    auto lum = ti_of_rgb(rgb, RgbReduction::luminance);
    auto mean = ti_of_rgb(rgb, RgbReduction::channel_mean);
    auto mx = ti_of_rgb(rgb, RgbReduction::channel_max);
    // max of per-channel magnitudes dominates their mean
    for (size_t i = 0; i < lum.values.data.size(); ++i)
        EXPECT_GE(mx.values.data[i] + 1e-12, mean.values.data[i]);
    double diff = 0;
    for (size_t i = 0; i < lum.values.data.size(); ++i)
        diff += std::abs(lum.values.data[i] - mean.values.data[i]);
    EXPECT_GT(diff, 1e-6);
}
