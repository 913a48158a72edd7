#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "s4dgs/metrics.hpp"
#include "s4dgs/synth.hpp"
#include "s4dgs/train.hpp"
#include "testutil.hpp"

using namespace s4dgs;
namespace fs = std::filesystem;

namespace {

SceneSpec<float> tiny_spec(uint64_t seed = 3) {
    SceneSpec<float> spec;
    spec.seed = seed;
    spec.gaussian_count = 200;
    spec.width = spec.height = 48;
    spec.train_frames = 4;
    spec.eval_frames = 2;
    return spec;
}

}  // namespace

TEST(GenerateScene, DeterministicInSeed) {
    auto spec = tiny_spec();
    auto [a, traj_a] = generate_scene(spec);
    auto [b, traj_b] = generate_scene(spec);
    ASSERT_EQ(a.size(), 200u);
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.position[i].x, b.position[i].x);
        EXPECT_EQ(a.color[i].y, b.color[i].y);
        EXPECT_EQ(a.raw_opacity[i], b.raw_opacity[i]);
    }
    spec.gaussian_count = 500;
    auto [c, traj_c] = generate_scene(spec);
    EXPECT_EQ(c.size(), 500u);
    EXPECT_THROW(generate_scene(SceneSpec<float>{.gaussian_count = 0}), std::invalid_argument);
}

TEST(GenerateScene, CentralFrameIsVisiblyCovered) {
    auto spec = tiny_spec();
    auto [cloud, traj] = generate_scene(spec);
    auto cams = dataset_cameras(spec, traj.center);
    const auto& mid = cams[cams.size() / 2].first;
    Background<float> bg;
    Raster<float> r = render(traj.at(cloud, mid.time), mid, bg, RenderSettings<float>{});
    size_t covered = 0;
    for (float a : r.alpha.data)
        if (a > 0.9f) ++covered;
    EXPECT_GE(covered, r.alpha.data.size() * 3 / 10) << "scene not visible enough";
}

TEST(GenerateScene, CheckerTextureHasEdgesMatchingOracle) {
    auto spec = tiny_spec(11);
    auto [cloud, traj] = generate_scene(spec);
    auto cams = dataset_cameras(spec, traj.center);
    Raster<float> r =
        render(traj.at(cloud, 0.0f), cams[0].first, Background<float>{}, RenderSettings<float>{});
    Image<double> rgb = r.rgb.template cast<double>();
    TextureMap<double> ti = ti_of_rgb(rgb);
    auto oracle = testutil::sobel_oracle(luminance(rgb));
    for (size_t i = 0; i < oracle.data.size(); ++i) EXPECT_EQ(ti.values.data[i], oracle.data[i]);
    double max_ti = *std::max_element(ti.values.data.begin(), ti.values.data.end());
    EXPECT_GT(max_ti, 0.5);  // color boundaries produce strong edges
}

TEST(RenderDataset, FileCountsSplitsAndQuantizationFloor) {
    auto dir = testutil::temp_dir("dataset");
    auto spec = tiny_spec(7);
    spec.train_frames = 8;
    spec.eval_frames = 4;
    auto [cloud, traj] = generate_scene(spec);
    DatasetManifest manifest = render_dataset(cloud, traj, spec, dir);

    ASSERT_EQ(manifest.frames.size(), 12u);
    int train = 0, eval = 0;
    std::set<double> train_times, eval_times;
    for (const auto& f : manifest.frames) {
        EXPECT_TRUE(fs::exists(fs::path(dir) / f.image));
        EXPECT_TRUE(fs::exists(fs::path(dir) / f.depth));
        if (f.split == "train") {
            train++;
            train_times.insert(f.time);
        } else {
            eval++;
            eval_times.insert(f.time);
        }
    }
    EXPECT_EQ(train, 8);
    EXPECT_EQ(eval, 4);
    for (double t : eval_times) EXPECT_EQ(train_times.count(t), 0u) << "timestamps must be disjoint";

    // loading a written frame and comparing to the in-memory render stays
    // above the 8-bit quantization floor
    const auto& info = manifest.frames[0];
    LoadedFrame<float> frame = load_frame<float>(dir, info);
    Background<float> bg;
    bg.far_depth = float(manifest.far_depth);
    Raster<float> r = render(traj.at(cloud, frame.camera.time), frame.camera, bg,
                             RenderSettings<float>{});
    EXPECT_GE(psnr(r.rgb, frame.rgb), 48.0);
    // depth PFM is bit-exact
    for (size_t i = 0; i < r.depth.data.size(); ++i)
        EXPECT_EQ(r.depth.data[i], frame.depth.data[i]);
}

TEST(RenderDataset, RerunIsByteIdentical) {
    auto spec = tiny_spec(9);
    auto dir_a = testutil::temp_dir("ds_a");
    auto dir_b = testutil::temp_dir("ds_b");
    auto [cloud, traj] = generate_scene(spec);
    render_dataset(cloud, traj, spec, dir_a);
    render_dataset(cloud, traj, spec, dir_b);
    for (const char* name : {"frames/train_000.png", "frames/eval_001.png", "manifest.json"}) {
        auto a = io::read_file((fs::path(dir_a) / name).string());
        auto b = io::read_file((fs::path(dir_b) / name).string());
        EXPECT_EQ(a, b) << name;
    }
}

TEST(DepthProxy, IdentityAndAffineInvariance) {
    Rng rng(5);
    Image<float> depth(24, 24, 1);
    for (int i = 0; i < 24; ++i)
        for (int j = 0; j < 24; ++j)
            depth.at(i, j) = 4.0f + std::sin(0.3f * i) + 0.5f * std::cos(0.4f * j);

    DepthProxyConfig ident;
    ident.a_lo = ident.a_hi = 1.0;
    ident.b_lo = ident.b_hi = 0.0;
    Image<float> same = depth_proxy(depth, 0, ident);
    for (size_t i = 0; i < depth.data.size(); ++i) EXPECT_EQ(same.data[i], depth.data[i]);

    DepthProxyConfig cfg;  // defaults: a in [0.5, 2], b in [-0.5, 0.5]
    LossConfig<float> loss_cfg;
    for (int frame = 0; frame < 6; ++frame) {
        Image<float> proxy = depth_proxy(depth, frame, cfg);
        Image<float> again = depth_proxy(depth, frame, cfg);
        for (size_t i = 0; i < proxy.data.size(); ++i) EXPECT_EQ(proxy.data[i], again.data[i]);
        EXPECT_LE(tadr_loss(depth, proxy, loss_cfg), 1e-5f);
        EXPECT_GE(pcc<float>(depth.data, proxy.data, 1e-8f), 1.0f - 1e-5f);
    }
    DepthProxyConfig bad;
    bad.a_lo = -0.1;
    EXPECT_THROW(depth_proxy(depth, 0, bad), std::invalid_argument);
}

TEST(Psnr, ClosedFormCases) {
    Image<float> a(8, 8, 3, 0.0f), b(8, 8, 3, 0.0f);
    EXPECT_DOUBLE_EQ(psnr(a, b), 100.0);  // cap
    for (auto& v : b.data) v = 1.0f;
    EXPECT_NEAR(psnr(a, b), 0.0, 1e-9);  // MSE = 1
    for (auto& v : b.data) v = 0.1f;
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);  // MSE = 0.01
    Image<float> c(4, 4, 3);
    EXPECT_THROW(psnr(a, c), std::invalid_argument);
}

class TrainedFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dataset_dir = testutil::temp_dir("train_ds");
        auto spec = tiny_spec(21);
        auto [cloud, traj] = generate_scene(spec);
        render_dataset(cloud, traj, spec, dataset_dir);
        DeformationConfig mlp;
        auto params = init_deformation<float>(mlp, 21);
        save_checkpoint(cloud, params, dataset_dir + "/gt.s4dgs");
    }
    static std::string dataset_dir;

    TrainConfig<float> base_config(const std::string& tag) const {
        TrainConfig<float> cfg;
        cfg.dataset_dir = dataset_dir;
        cfg.out_dir = testutil::temp_dir(tag);
        cfg.iterations = 30;
        cfg.warmup = 10;
        cfg.eval_interval = 10;
        cfg.init_count = 150;
        cfg.mlp.hidden_layers = 2;
        cfg.mlp.width = 16;
        cfg.seed = 4;
        return cfg;
    }
};
std::string TrainedFixture::dataset_dir;

TEST_F(TrainedFixture, ZeroIterationsKeepsInitialization) {
    TrainConfig<float> cfg = base_config("t0");
    cfg.iterations = 0;
    cfg.warmup = 0;
    TrainResult<float> res = train(cfg);
    GaussianCloud<float> want = init_cloud<float>(cfg.init_box, size_t(cfg.init_count), cfg.seed);
    ASSERT_EQ(res.cloud.size(), want.size());
    for (size_t i = 0; i < want.size(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(res.cloud.position[i][c], want.position[i][c]);

    std::ifstream csv(res.metrics_path);
    std::string header, extra;
    std::getline(csv, header);
    EXPECT_EQ(header, "iter,l1,ssim,tex,tadr,total,psnr_probe");
    EXPECT_FALSE(std::getline(csv, extra));  // header only
}

TEST_F(TrainedFixture, DeterministicRerunsAreBitIdentical) {
    TrainConfig<float> cfg1 = base_config("det_a");
    cfg1.noise.c_noise = 20.0f;  // exercise the noise path too
    TrainConfig<float> cfg2 = cfg1;
    cfg2.out_dir = testutil::temp_dir("det_b");
    TrainResult<float> a = train(cfg1);
    TrainResult<float> b = train(cfg2);
    auto bytes_a = io::read_file(a.checkpoint_path);
    auto bytes_b = io::read_file(b.checkpoint_path);
    EXPECT_EQ(bytes_a, bytes_b);
    auto csv_a = io::read_file(a.metrics_path);
    auto csv_b = io::read_file(b.metrics_path);
    EXPECT_EQ(csv_a, csv_b);
}

TEST_F(TrainedFixture, CsvRowsSatisfyDecomposition) {
    TrainConfig<float> cfg = base_config("csv");
    cfg.iterations = 12;
    cfg.warmup = 4;
    TrainResult<float> res = train(cfg);
    std::ifstream csv(res.metrics_path);
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line)) {
        double iter, l1v, ssimv, tex, tadr, total;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &iter, &l1v, &ssimv, &tex,
                              &tadr, &total),
                  6)
            << line;
        double want = (1 - cfg.loss.lambda_ssim) * l1v + cfg.loss.lambda_ssim * ssimv +
                      cfg.loss.lambda1 * tex + cfg.loss.lambda2 * tadr;
        EXPECT_NEAR(total, want, 1e-5 * std::max(1.0, std::abs(total)));
        rows++;
    }
    EXPECT_EQ(rows, 12);
}

TEST_F(TrainedFixture, EvaluateGtCloudHitsQuantizationFloor) {
    auto [cloud, params] = load_checkpoint<float>(dataset_dir + "/gt.s4dgs");
    auto manifest = load_manifest(dataset_dir + "/manifest.json");
    // the scene moves; evaluating the canonical cloud only works on frames
    // rendered at t=0, so evaluate a static copy of the dataset instead
    auto spec = tiny_spec(21);
    spec.motion.translation_amp = 0;
    spec.motion.rotation_amp = 0;
    auto static_dir = testutil::temp_dir("static_ds");
    auto [static_cloud, traj] = generate_scene(spec);
    render_dataset(static_cloud, traj, spec, static_dir);
    DeformationConfig mlp_cfg;
    auto identity = init_deformation<float>(mlp_cfg, 1);
    auto static_manifest = load_manifest(static_dir + "/manifest.json");
    EvalTable table = evaluate(static_cloud, identity, static_dir, static_manifest, "eval");
    EXPECT_GE(table.mean_psnr, 48.0);
    EXPECT_GE(table.mean_ssim, 0.99);
    EXPECT_EQ(table.rows.size(), 2u);

    EXPECT_THROW(evaluate(static_cloud, identity, static_dir, static_manifest, "nope"),
                 std::runtime_error);
}

TEST_F(TrainedFixture, RenderNovelCanonicalEqualsOmittedTime) {
    auto [cloud, params] = load_checkpoint<float>(dataset_dir + "/gt.s4dgs");
    auto manifest = load_manifest(dataset_dir + "/manifest.json");
    auto cam = frame_camera<float>(manifest.frames[1]);
    Background<float> bg;
    bg.far_depth = float(manifest.far_depth);
    // zero-head checkpoint: canonical render equals any-t render bitwise
    Raster<float> canonical = render_novel<float>(cloud, params, cam, std::nullopt, bg);
    Raster<float> at_t = render_novel<float>(cloud, params, cam, 0.7f, bg);
    for (size_t i = 0; i < canonical.rgb.data.size(); ++i)
        EXPECT_EQ(canonical.rgb.data[i], at_t.rgb.data[i]);
    EXPECT_THROW(render_novel<float>(cloud, params, cam, 1.5f, bg), std::invalid_argument);
}

TEST_F(TrainedFixture, TrainingReducesLoss) {
    TrainConfig<float> cfg = base_config("learn");
    cfg.iterations = 120;
    cfg.warmup = 40;
    cfg.eval_interval = 40;
    TrainResult<float> res = train(cfg);
    std::ifstream csv(res.metrics_path);
    std::string line;
    std::getline(csv, line);
    double first_total = -1, last_total = -1;
    while (std::getline(csv, line)) {
        double iter, l1v, ssimv, tex, tadr, total;
        std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &iter, &l1v, &ssimv, &tex, &tadr,
                    &total);
        if (first_total < 0) first_total = total;
        last_total = total;
    }
    EXPECT_LT(last_total, first_total);
}

TEST_F(TrainedFixture, InvalidConfigsThrow) {
    TrainConfig<float> cfg = base_config("bad");
    cfg.warmup = cfg.iterations + 5;
    EXPECT_THROW(train(cfg), std::invalid_argument);
    cfg = base_config("bad2");
    cfg.lr.scale = 0;
    EXPECT_THROW(train(cfg), std::invalid_argument);
}
