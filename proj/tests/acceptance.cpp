// Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
// Training-based criteria share one synthetic scene and memoized runs.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <map>

#include "s4dgs/checkpoint.hpp"
#include "s4dgs/gradcheck.hpp"
#include "s4dgs/metrics.hpp"
#include "s4dgs/synth.hpp"
#include "s4dgs/train.hpp"
#include "testutil.hpp"

using namespace s4dgs;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("ACCEPTANCE %2d %-22s %s%s%s\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
}

// ---- shared acceptance scene and memoized training runs ----

struct RunKey {
    int seed;
    float lambda1, lambda2, c_noise;
    bool use_pcc;
    auto operator<=>(const RunKey&) const = default;
};

class Harness {
public:
    static Harness& get() {
        static Harness h;
        return h;
    }

    const std::string& dataset() {
        if (dataset_dir_.empty()) {
            dataset_dir_ = testutil::temp_dir("acceptance_scene");
            SceneSpec<float> spec;
            spec.seed = 2024;
            spec.gaussian_count = 1000;
            spec.width = spec.height = 96;
            spec.train_frames = 10;
            spec.eval_frames = 4;
            auto [cloud, traj] = generate_scene(spec);
            render_dataset(cloud, traj, spec, dataset_dir_);
        }
        return dataset_dir_;
    }

    TrainConfig<float> config(const RunKey& key, const std::string& out_tag) {
        TrainConfig<float> cfg;
        cfg.dataset_dir = dataset();
        cfg.out_dir = testutil::temp_dir("acc_run_" + out_tag);
        cfg.iterations = 5000;
        cfg.warmup = 500;
        cfg.seed = uint64_t(key.seed);
        cfg.loss.lambda1 = key.lambda1;
        cfg.loss.lambda2 = key.lambda2;
        cfg.loss.use_pcc = key.use_pcc;
        cfg.noise.c_noise = key.c_noise;
        return cfg;
    }

    // mean eval-split PSNR for a configuration, trained once and cached
    double eval_psnr(const RunKey& key, const std::string& tag) {
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        TrainConfig<float> cfg = config(key, tag + "_s" + std::to_string(key.seed));
        TrainResult<float> res = train(cfg);
        auto manifest = load_manifest(dataset() + "/manifest.json");
        EvalTable table = evaluate(res.cloud, res.params, dataset(), manifest, "eval");
        cache_[key] = table.mean_psnr;
        std::printf("  [run] %-8s seed %d  eval psnr %.3f dB\n", tag.c_str(), key.seed,
                    table.mean_psnr);
        std::fflush(stdout);
        return table.mean_psnr;
    }

    RunKey full(int seed) const { return {seed, 0.01f, 0.01f, 20.0f, true}; }
    RunKey no_tadr(int seed) const { return {seed, 0.01f, 0.0f, 20.0f, true}; }
    RunKey no_taco(int seed) const { return {seed, 0.01f, 0.01f, 0.0f, true}; }
    RunKey baseline(int seed) const { return {seed, 0.0f, 0.0f, 0.0f, true}; }
    RunKey l1_variant(int seed) const { return {seed, 0.01f, 0.01f, 20.0f, false}; }

private:
    std::string dataset_dir_;
    std::map<RunKey, double> cache_;
};

}  // namespace

TEST(Acceptance, C01_GradientFidelity) {
    auto t0 = std::chrono::steady_clock::now();
    CheckTolerances tol;  // 1e-3 relative / 1e-6 absolute, 64-bit fixture
    CheckReport rep = check_all(tol);
    double secs = seconds_since(t0);

    bool pass = rep.pass() && secs <= 120.0;
    std::vector<std::string> must{"raster/position", "raster/raw_scale",  "raster/rotation",
                                  "raster/raw_opacity", "raster/color",   "raster/raw_ti",
                                  "loss/rgb",        "loss/pcc",          "loss/tex",
                                  "loss/tadr",       "loss/total",        "encoding",
                                  "deform/mlp",      "e2e/mlp"};
    for (const auto& name : must) {
        bool found = false;
        for (const auto& g : rep.groups)
            if (g.group == name && g.checked > 0) found = true;
        if (!found) pass = false;
        EXPECT_TRUE(found) << "missing gradcheck group " << name;
    }
    EXPECT_TRUE(rep.pass()) << rep.text();
    EXPECT_LE(secs, 120.0);
    char detail[64];
    std::snprintf(detail, sizeof(detail), "(%zu groups, %.1f s)", rep.groups.size(), secs);
    report(1, "gradient fidelity", pass, detail);
}

TEST(Acceptance, C02_ClosedFormKernels) {
    bool pass = true;

    // Sobel ramp responses are exactly 8 in the interior (64-bit)
    for (bool horizontal : {true, false}) {
        Image<double> img(9, 9, 1);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) img.at(i, j) = double(horizontal ? j : i);
        auto ti = sobel_ti(img);
        for (int i = 1; i < 8; ++i)
            for (int j = 1; j < 8; ++j)
                if (ti.values.at(i, j) != 8.0) pass = false;
    }
    EXPECT_TRUE(pass) << "ramp response not exactly 8";

    // bit-for-bit against the dense convolution oracle
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        Image<double> img(17, 13, 1);
        for (auto& v : img.data) v = rng.uniform(-3.0, 3.0);
        auto ti = sobel_ti(img);
        auto want = testutil::sobel_oracle(img);
        for (size_t i = 0; i < want.data.size(); ++i) {
            EXPECT_EQ(ti.values.data[i], want.data[i]);
            if (ti.values.data[i] != want.data[i]) pass = false;
        }
    }

    // PCC affine invariance at 1e-9 over 100 draws, and |PCC| <= 1 + 1e-9
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(256), y(256);
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        double a = rng.uniform(0.05, 3.0), b = rng.uniform(-5.0, 5.0);
        for (size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        double p = pcc<double>(x, y, 1e-12);
        EXPECT_NEAR(p, 1.0, 1e-9);
        if (std::abs(p - 1.0) > 1e-9) pass = false;

        for (auto& v : y) v = rng.uniform(-7.0, 7.0);
        double q = pcc<double>(x, y, 1e-8);
        EXPECT_LE(std::abs(q), 1.0 + 1e-9);
        if (std::abs(q) > 1.0 + 1e-9) pass = false;
    }
    report(2, "closed-form kernels", pass);
}

TEST(Acceptance, C03_TadrAffineInvariance) {
    Rng rng(7);
    LossConfig<double> cfg;
    bool pass = true;
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        Image<double> depth(24, 24, 1);
        // mix of smooth structure and per-pixel noise
        double fx = rng.uniform(0.2, 0.9), fy = rng.uniform(0.2, 0.9);
        for (int i = 0; i < 24; ++i)
            for (int j = 0; j < 24; ++j)
                depth.at(i, j) = 4 + std::sin(fx * i) + std::cos(fy * j) +
                                 0.2 * rng.uniform(-1.0, 1.0);
        double a = rng.uniform(0.5, 2.0), b = rng.uniform(-1.0, 1.0);
        Image<double> remapped = depth;
        for (auto& v : remapped.data) v = a * v + b;
        double loss = tadr_loss(remapped, depth, cfg);
        worst = std::max(worst, loss);
        if (!(loss <= 1e-6)) pass = false;
        EXPECT_LE(loss, 1e-6);
    }
    char detail[48];
    std::snprintf(detail, sizeof(detail), "(worst %.2e)", worst);
    report(3, "TADR affine invariance", pass, detail);
}

TEST(Acceptance, C04_NoiseGateArithmetic) {
    bool pass = true;
    if (noise_gate(0.995, 100.0, 0.995) != 0.5) pass = false;
    EXPECT_EQ(noise_gate(0.995, 100.0, 0.995), 0.5);

    double g1 = noise_gate(1.0, 100.0, 0.995);
    EXPECT_NEAR(g1, 0.377540669, 1e-9);
    if (std::abs(g1 - 0.377540669) > 1e-9) pass = false;

    // monotone decreasing over the grid; near v = 0 the gate saturates at
    // double precision (consecutive differences fall below one ulp of 1.0),
    // so strictness is asserted where the decrement is representable
    double prev = noise_gate(0.0, 100.0, 0.995);
    int strict = 0;
    for (int i = 1; i <= 1000; ++i) {
        double v = double(i) / 1000.0;
        double g = noise_gate(v, 100.0, 0.995);
        bool ok = (g <= prev) && (prev < 1.0 - 1e-13 ? g < prev : true);
        EXPECT_TRUE(ok) << "at v = " << v;
        if (!ok) pass = false;
        if (g < prev) ++strict;
        prev = g;
    }
    EXPECT_GE(strict, 350);  // the transition region decreases strictly
    if (strict < 350) pass = false;
    report(4, "noise-gate arithmetic", pass);
}

TEST(Acceptance, C05_TacoDegeneracy) {
    // c_noise = 0 over 200 real training iterations: the TACO update is the
    // plain optimizer bit for bit, regardless of the rest of the noise config.
    Harness& h = Harness::get();
    RunKey key{1, 0.01f, 0.01f, 0.0f, true};
    TrainConfig<float> a = h.config(key, "degen_a");
    a.iterations = 200;
    a.warmup = 50;
    TrainConfig<float> b = a;
    b.out_dir = testutil::temp_dir("acc_run_degen_b");
    b.noise.k = 7;  // wildly different gate shape, still multiplied by zero
    b.noise.t = 0.3f;
    b.noise.independent_draws = false;
    b.noise.anisotropic = false;

    TrainResult<float> ra = train(a);
    TrainResult<float> rb = train(b);
    auto bytes_a = io::read_file(ra.checkpoint_path);
    auto bytes_b = io::read_file(rb.checkpoint_path);
    bool pass = bytes_a == bytes_b;
    EXPECT_TRUE(pass);
    report(5, "TACO degeneracy", pass, "(200 iterations, bit-identical)");
}

TEST(Acceptance, C06_Realizability) {
    auto t0 = std::chrono::steady_clock::now();
    // static self-consistency scene at 64x64, trained from the ground truth
    std::string dir = testutil::temp_dir("acc_static");
    SceneSpec<float> spec;
    spec.seed = 77;
    spec.gaussian_count = 600;
    spec.width = spec.height = 64;
    spec.train_frames = 8;
    spec.eval_frames = 2;
    spec.motion.translation_amp = 0;
    spec.motion.rotation_amp = 0;
    auto [cloud, traj] = generate_scene(spec);
    render_dataset(cloud, traj, spec, dir);
    DeformationConfig mlp_cfg;
    auto identity = init_deformation<float>(mlp_cfg, 77);
    save_checkpoint(cloud, identity, dir + "/gt.s4dgs");

    TrainConfig<float> cfg;
    cfg.dataset_dir = dir;
    cfg.out_dir = testutil::temp_dir("acc_static_run");
    cfg.init_checkpoint = dir + "/gt.s4dgs";
    cfg.iterations = 500;
    cfg.warmup = 100;
    cfg.seed = 1;
    TrainResult<float> res = train(cfg);

    auto manifest = load_manifest(dir + "/manifest.json");
    EvalTable table = evaluate(res.cloud, res.params, dir, manifest, "train");
    double secs = seconds_since(t0);
    bool pass = table.mean_psnr >= 47.0 && secs <= 300.0;
    EXPECT_GE(table.mean_psnr, 47.0);
    EXPECT_LE(secs, 300.0);
    char detail[64];
    std::snprintf(detail, sizeof(detail), "(train psnr %.2f dB, %.0f s)", table.mean_psnr, secs);
    report(6, "realizability", pass, detail);
}

TEST(Acceptance, C07_AblationOrdering) {
    auto t0 = std::chrono::steady_clock::now();
    Harness& h = Harness::get();
    const std::vector<int> seeds{1, 2, 3};

    double full_m = 0, tadr_m = 0, taco_m = 0, base_m = 0;
    bool per_seed_ok = true;
    for (int s : seeds) {
        double full = h.eval_psnr(h.full(s), "full");
        double no_tadr = h.eval_psnr(h.no_tadr(s), "noTADR");
        double no_taco = h.eval_psnr(h.no_taco(s), "noTACO");
        double base = h.eval_psnr(h.baseline(s), "baseline");
        full_m += full / 3;
        tadr_m += no_tadr / 3;
        taco_m += no_taco / 3;
        base_m += base / 3;
        // single-seed violations of the ablation inequalities up to 0.1 dB
        if (full < no_tadr - 0.1 || full < no_taco - 0.1) per_seed_ok = false;
        EXPECT_GE(full, no_tadr - 0.1) << "seed " << s;
        EXPECT_GE(full, no_taco - 0.1) << "seed " << s;
    }
    double secs = seconds_since(t0);

    bool mean_ok = full_m >= tadr_m && full_m >= taco_m && full_m >= base_m &&
                   full_m - base_m >= 0.3;
    EXPECT_GE(full_m, tadr_m);
    EXPECT_GE(full_m, taco_m);
    EXPECT_GE(full_m - base_m, 0.3);
    EXPECT_LE(secs, 1800.0);
    bool pass = mean_ok && per_seed_ok && secs <= 1800.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "(means: full %.2f, w/o TADR %.2f, w/o TACO %.2f, baseline %.2f; %.0f s)",
                  full_m, tadr_m, taco_m, base_m, secs);
    report(7, "ablation ordering", pass, detail);
}

TEST(Acceptance, C08_PccVersusL1) {
    Harness& h = Harness::get();
    const std::vector<int> seeds{1, 2, 3};
    double pcc_m = 0, l1_m = 0;
    for (int s : seeds) {
        pcc_m += h.eval_psnr(h.full(s), "full") / 3;
        l1_m += h.eval_psnr(h.l1_variant(s), "l1tex") / 3;
    }
    bool pass = l1_m <= pcc_m;
    EXPECT_LE(l1_m, pcc_m);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "(PCC %.2f dB vs L1 %.2f dB, 3-seed means)", pcc_m,
                  l1_m);
    report(8, "PCC vs L1 direction", pass, detail);
}

TEST(Acceptance, C09_Determinism) {
    Harness& h = Harness::get();
    TrainConfig<float> a = h.config(h.full(1), "det_a");
    TrainConfig<float> b = h.config(h.full(1), "det_b");
    TrainResult<float> ra = train(a);
    TrainResult<float> rb = train(b);
    bool ckpt_same = io::read_file(ra.checkpoint_path) == io::read_file(rb.checkpoint_path);
    bool csv_same = io::read_file(ra.metrics_path) == io::read_file(rb.metrics_path);
    bool pass = ckpt_same && csv_same;
    EXPECT_TRUE(ckpt_same);
    EXPECT_TRUE(csv_same);
    report(9, "determinism", pass, "(checkpoints and metrics CSVs bit-identical)");
}

TEST(Acceptance, C10_FormatRoundTrips) {
    bool pass = true;
    auto dir = testutil::temp_dir("acc_formats");

    // checkpoint: exact round trip, empty cloud, corrupted header
    {
        GaussianCloud<float> cloud = init_cloud<float>({{-1, -1, -1}, {1, 1, 1}}, 7, 3);
        DeformationConfig mc;
        mc.hidden_layers = 2;
        mc.width = 8;
        auto params = init_deformation<float>(mc, 4);
        save_checkpoint(cloud, params, dir + "/a.s4dgs");
        auto [c2, p2] = load_checkpoint<float>(dir + "/a.s4dgs");
        for (size_t i = 0; i < cloud.size(); ++i)
            for (int c = 0; c < 4; ++c)
                if (cloud.rotation[i][c] != c2.rotation[i][c]) pass = false;
        GaussianCloud<float> empty;
        save_checkpoint(empty, params, dir + "/empty.s4dgs");
        if (load_checkpoint<float>(dir + "/empty.s4dgs").first.size() != 0) pass = false;
        auto bytes = io::read_file(dir + "/a.s4dgs");
        bytes[0] = 'X';
        io::write_file(dir + "/bad.s4dgs", bytes);
        EXPECT_THROW(load_checkpoint<float>(dir + "/bad.s4dgs"), std::runtime_error);
    }
    // png: exact round trip of quantized data, bad signature rejected
    {
        Image<float> img(12, 17, 3);
        Rng rng(5);
        for (auto& v : img.data) v = float(rng.index(256)) / 255.0f;
        io::save_png(img, dir + "/x.png");
        Image<float> back = io::load_png<float>(dir + "/x.png");
        for (size_t i = 0; i < img.data.size(); ++i)
            if (img.data[i] != back.data[i]) pass = false;
        auto bytes = io::read_file(dir + "/x.png");
        bytes[1] = 0;
        io::write_file(dir + "/bad.png", bytes);
        EXPECT_THROW(io::load_png<float>(dir + "/bad.png"), std::runtime_error);
    }
    // pfm: bit-exact floats, malformed header rejected
    {
        Image<float> depth(9, 6, 1);
        Rng rng(6);
        for (auto& v : depth.data) v = float(rng.normal()) * 4.0f;
        io::save_pfm(depth, dir + "/d.pfm");
        Image<float> back = io::load_pfm<float>(dir + "/d.pfm");
        for (size_t i = 0; i < depth.data.size(); ++i)
            if (depth.data[i] != back.data[i]) pass = false;
        std::ofstream(dir + "/bad.pfm") << "Px\n4 4\n-1.0\n";
        EXPECT_THROW(io::load_pfm<float>(dir + "/bad.pfm"), std::runtime_error);
    }
    // manifest: structural round trip, malformed JSON rejected
    {
        DatasetManifest m;
        m.width = 32;
        m.height = 32;
        m.far_depth = 7.5;
        FrameInfo f;
        f.image = "frames/train_000.png";
        f.depth = "frames/train_000.pfm";
        f.time = 0.5;
        f.split = "eval";
        f.fx = f.fy = 40;
        f.cx = f.cy = 16;
        f.width = f.height = 32;
        for (int i = 0; i < 4; ++i) f.pose[i * 4 + i] = 1.0;
        m.frames.push_back(f);
        save_manifest(m, dir + "/m.json");
        DatasetManifest back = load_manifest(dir + "/m.json");
        if (back.frames.size() != 1 || back.frames[0].pose != f.pose ||
            back.frames[0].split != "eval")
            pass = false;
        std::ofstream(dir + "/bad.json") << "{ nope";
        EXPECT_THROW(load_manifest(dir + "/bad.json"), std::runtime_error);
    }
    EXPECT_TRUE(pass);
    report(10, "format round trips", pass);
}
