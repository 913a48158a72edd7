#include <gtest/gtest.h>

#include <chrono>

#include "s4dgs/gradcheck.hpp"

using namespace s4dgs;

TEST(FiniteDiff, QuadraticAndSine) {
    double x = 3.0;
    auto sq_fn = [&]() { return x * x; };
    EXPECT_NEAR(finite_diff(sq_fn, &x, 1e-5), 6.0, 1e-8);
    x = 0.0;
    auto sin_fn = [&]() { return std::sin(x); };
    EXPECT_NEAR(finite_diff(sin_fn, &x, 1e-4), 1.0, 1e-8);
    EXPECT_EQ(x, 0.0);  // restored
}

TEST(FiniteDiff, NonFiniteEvaluationThrows) {
    double x = 0.0;
    auto fn = [&]() { return std::log(x); };  // NaN at x - h
    EXPECT_THROW(finite_diff(fn, &x, 0.5), std::runtime_error);
}

TEST(CheckGroup, ZeroGradientOfConstantPasses) {
    std::vector<double> params{0.5, -1.0, 2.0};
    std::vector<double*> ptrs{&params[0], &params[1], &params[2]};
    std::vector<double> analytic{0, 0, 0};
    auto fn = [&]() { return 42.0; };
    GroupReport rep = check_group("const", ptrs, analytic, fn);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.checked, 3u);
}

TEST(CheckGroup, CorruptedBackwardFails) {
    std::vector<double> params{0.7, -0.3};
    std::vector<double*> ptrs{&params[0], &params[1]};
    auto fn = [&]() { return params[0] * params[0] + 3.0 * params[1]; };
    std::vector<double> analytic{2 * params[0], 3.0};
    EXPECT_TRUE(check_group("ok", ptrs, analytic, fn).passed());

    std::vector<double> corrupted{-2 * params[0], 3.0};  // test-only sign flip
    GroupReport rep = check_group("bad", ptrs, corrupted, fn);
    EXPECT_FALSE(rep.passed());
    ASSERT_EQ(rep.failing.size(), 1u);
    EXPECT_EQ(rep.failing[0], 0u);
}

TEST(CheckAll, FixturePassesAtAcceptanceTolerances) {
    auto start = std::chrono::steady_clock::now();
    CheckTolerances tol;  // 1e-3 relative, 1e-6 absolute
    CheckReport report = check_all(tol);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // every required group is present
    std::vector<std::string> want{
        "raster/position", "raster/raw_scale", "raster/rotation", "raster/raw_opacity",
        "raster/color",    "raster/raw_ti",    "loss/rgb",        "loss/tex",
        "loss/tadr",       "loss/pcc",         "loss/total",      "encoding",
        "deform/mlp",      "e2e/position",     "e2e/mlp"};
    for (const auto& name : want) {
        bool found = false;
        for (const auto& g : report.groups)
            if (g.group == name) {
                found = true;
                EXPECT_TRUE(g.passed()) << name << "\n" << report.text();
                EXPECT_GT(g.checked, 0u) << name;
            }
        EXPECT_TRUE(found) << name;
    }
    EXPECT_TRUE(report.pass()) << report.text();
    EXPECT_LT(secs, 120.0);

    // report formats are well-formed
    EXPECT_NE(report.text().find("PASS"), std::string::npos);
    EXPECT_NE(report.csv().find("group,checked"), std::string::npos);
}

TEST(CheckAll, ZeroHeadDeformationHasZeroLossGradient) {
    // zero-initialized heads: a constant (zero) deformation cannot move the
    // loss, so head weight gradients vanish only for dx/dr... the hidden
    // weights feed dead heads and get exactly zero.
    CheckFixture fix = make_check_fixture();
    DeformationConfig cfg;
    cfg.hidden_layers = 1;
    cfg.width = 8;
    cfg.pos_freqs = 2;
    cfg.time_freqs = 2;
    auto params = init_deformation<double>(cfg, 3);  // zero heads

    DeformRecord<double> rec;
    Deltas<double> deltas = deform(params, fix.cloud.position, fix.time, &rec);
    Deltas<double> d_deltas;
    d_deltas.resize(deltas.size());
    for (size_t i = 0; i < deltas.size(); ++i) {
        d_deltas.dx[i] = {1, 2, 3};
        d_deltas.dr[i] = {1, 1, 1, 1};
        d_deltas.ds[i] = {1, 1, 1};
    }
    auto grads = deform_backward(params, rec, d_deltas);
    for (const auto& layer : grads.hidden)
        for (double g : layer.w) EXPECT_EQ(g, 0.0);  // dead heads block everything
    // head gradients themselves are nonzero (they see the activations)
    double head_norm = 0;
    for (double g : grads.head_dx.w) head_norm += std::abs(g);
    EXPECT_GT(head_norm, 0.0);
}
