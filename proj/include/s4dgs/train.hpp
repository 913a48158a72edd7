#pragma once

// Training orchestration: per iteration, sample a training frame, render the
// deformed cloud at its timestamp (canonical during warm-up), evaluate the
// total objective, backpropagate, TACO-step, prune on schedule. Fully
// deterministic from (config, seed).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/apply.hpp"
#include "s4dgs/checkpoint.hpp"
#include "s4dgs/cloud.hpp"
#include "s4dgs/dataset.hpp"
#include "s4dgs/gradcheck.hpp"
#include "s4dgs/losses.hpp"
#include "s4dgs/metrics.hpp"
#include "s4dgs/rng.hpp"
#include "s4dgs/synth.hpp"
#include "s4dgs/taco.hpp"

namespace s4dgs {

template <typename T>
struct TrainConfig {
    std::string dataset_dir;
    std::string out_dir;
    std::string init_checkpoint;  // optional; overrides random initialization

    int iterations = 5000;
    int warmup = 500;  // canonical-only iterations before the MLP engages
    uint64_t seed = 1;
    bool deterministic = true;  // fixed accumulation order (always honored)

    LossConfig<T> loss;
    NoiseConfig<T> noise;
    GroupLearningRates<T> lr;
    OptimizerKind optimizer = OptimizerKind::adam;

    int prune_interval = 100;
    T prune_threshold = T(0.005);
    int eval_interval = 100;

    int init_count = 1500;
    Box3<T> init_box{{-1.3, -1.3, -1.3}, {1.3, 1.3, 1.3}};
    DeformationConfig mlp;
    DepthProxyConfig proxy;

    void validate() const {
        if (iterations < 0 || warmup < 0) throw std::invalid_argument("train: negative iteration counts");
        if (iterations > 0 && warmup >= iterations)
            throw std::invalid_argument("train: warm-up must end before the last iteration");
        if (!(lr.position.start > T(0)) || !(lr.scale > T(0)) || !(lr.rotation > T(0)) ||
            !(lr.opacity > T(0)) || !(lr.color > T(0)) || !(lr.ti > T(0)) || !(lr.mlp > T(0)))
            throw std::invalid_argument("train: learning rates must be positive");
        proxy.validate();
    }
};

template <typename T>
struct TrainResult {
    GaussianCloud<T> cloud;
    DeformationParams<T> params;
    std::string checkpoint_path;
    std::string metrics_path;
    double final_probe_psnr = 0;
};

namespace detail {

// Everything fixed about a frame during training, precomputed at load.
template <typename T>
struct PreparedFrame {
    Camera<T> camera;
    GtFrame<T> gt;
};

template <typename T>
std::string csv_row(int64_t iter, const LossReport<T>& rep, std::optional<double> probe) {
    char buf[256];
    if (probe)
        std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f\n", (long long)iter,
                      double(rep.l1), double(rep.ssim), double(rep.tex), double(rep.tadr),
                      double(rep.total), *probe);
    else
        std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,\n", (long long)iter,
                      double(rep.l1), double(rep.ssim), double(rep.tex), double(rep.tadr),
                      double(rep.total));
    return buf;
}

}  // namespace detail

template <typename T>
TrainResult<T> train(const TrainConfig<T>& config) {
    namespace fs = std::filesystem;
    config.validate();
    fs::create_directories(config.out_dir);

    DatasetManifest manifest =
        load_manifest((fs::path(config.dataset_dir) / "manifest.json").string());
    Background<T> bg;
    bg.rgb = {T(manifest.background[0]), T(manifest.background[1]), T(manifest.background[2])};
    bg.far_depth = T(manifest.far_depth);
    RenderSettings<T> settings;

    // Load frames; the TI map and the perturbed depth proxy are fixed per frame.
    std::vector<detail::PreparedFrame<T>> train_frames;
    std::optional<detail::PreparedFrame<T>> probe_frame;
    int frame_index = 0;
    for (const auto& info : manifest.frames) {
        LoadedFrame<T> f = load_frame<T>(config.dataset_dir, info);
        detail::PreparedFrame<T> pf;
        pf.camera = f.camera;
        pf.gt.rgb = std::move(f.rgb);
        pf.gt.ti = ti_of_rgb(pf.gt.rgb);
        pf.gt.depth_proxy = depth_proxy(f.depth, frame_index, config.proxy);
        if (info.split == "train")
            train_frames.push_back(std::move(pf));
        else if (!probe_frame)
            probe_frame = std::move(pf);
        ++frame_index;
    }
    if (train_frames.empty()) throw std::runtime_error("train: dataset has no training frames");
    if (!probe_frame) probe_frame = train_frames.front();

    // Initialization
    GaussianCloud<T> cloud;
    DeformationParams<T> params;
    if (!config.init_checkpoint.empty()) {
        auto loaded = load_checkpoint<T>(config.init_checkpoint);
        cloud = std::move(loaded.first);
        params = std::move(loaded.second);
    } else {
        cloud = init_cloud<T>(config.init_box, size_t(config.init_count), config.seed);
        params = init_deformation<T>(config.mlp, splitmix64(config.seed) ^ 0x5851f42d4c957f2dull);
    }

    TrainState<T> state(config.seed);
    state.kind = config.optimizer;
    state.lr = config.lr;
    Rng frame_rng(splitmix64(config.seed) ^ 0x2545f4914f6cdd1dull);

    std::string metrics_path = (fs::path(config.out_dir) / "metrics.csv").string();
    std::ofstream csv(metrics_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("train: cannot open " + metrics_path);
    csv << "iter,l1,ssim,tex,tadr,total,psnr_probe\n";

    auto probe_psnr = [&]() {
        Deltas<T> d = deform(params, cloud.position, probe_frame->camera.time);
        Raster<T> r = render(apply(cloud, &d), probe_frame->camera, bg, settings);
        return psnr(r.rgb, probe_frame->gt.rgb);
    };

    double last_probe = 0;
    for (int iter = 0; iter < config.iterations; ++iter) {
        const auto& frame = train_frames[frame_rng.index(train_frames.size())];
        bool warm = iter < config.warmup;

        Deltas<T> deltas;
        DeformRecord<T> drec;
        if (!warm) deltas = deform(params, cloud.position, frame.camera.time, &drec);

        ApplyContext<T> ctx;
        RenderAttrs<T> attrs = apply(cloud, warm ? nullptr : &deltas, &ctx);
        ForwardRecord<T> rrec;
        Raster<T> raster = render(attrs, frame.camera, bg, settings, &rrec);

        RasterAdjoint<T> adjoint;
        LossReport<T> report = total_loss(raster, frame.gt, config.loss, &adjoint);
        if (!std::isfinite(double(report.total)))
            throw std::runtime_error(
                "train: non-finite loss at iteration " + std::to_string(iter) + " (l1=" +
                std::to_string(double(report.l1)) + ", ssim=" + std::to_string(double(report.ssim)) +
                ", tex=" + std::to_string(double(report.tex)) +
                ", tadr=" + std::to_string(double(report.tadr)) + ")");

        AttrGrads<T> agrads = render_backward(rrec, adjoint);
        Deltas<T> d_deltas;
        CloudGrads<T> cgrads =
            apply_backward(cloud, ctx, attrs, agrads, warm ? nullptr : &d_deltas);

        if (warm) {
            taco_step<T>(cloud, cgrads, nullptr, nullptr, state, config.noise);
        } else {
            DeformationParams<T> pgrads = deform_backward(params, drec, d_deltas);
            taco_step(cloud, cgrads, &params, &pgrads, state, config.noise);
        }

        if (config.prune_interval > 0 && (iter + 1) % config.prune_interval == 0 &&
            iter + 1 < config.iterations) {
            auto survivors = opacity_survivors(cloud, config.prune_threshold);
            if (survivors.size() < cloud.size()) {
                cloud = select(cloud, survivors);
                state.compact(survivors);
            }
        }

        std::optional<double> probe;
        if (config.eval_interval > 0 &&
            ((iter + 1) % config.eval_interval == 0 || iter + 1 == config.iterations)) {
            last_probe = probe_psnr();
            probe = last_probe;
        }
        csv << detail::csv_row(iter, report, probe);
    }
    csv.close();

    std::string ckpt_path = (fs::path(config.out_dir) / "checkpoint.s4dgs").string();
    save_checkpoint(cloud, params, ckpt_path);

    TrainResult<T> result;
    result.cloud = std::move(cloud);
    result.params = std::move(params);
    result.checkpoint_path = ckpt_path;
    result.metrics_path = metrics_path;
    result.final_probe_psnr = last_probe;
    return result;
}

/// Renders a checkpoint at (camera, t); no timestamp means canonical space.
template <typename T>
Raster<T> render_novel(const GaussianCloud<T>& cloud, const DeformationParams<T>& params,
                       const Camera<T>& camera, std::optional<T> t, const Background<T>& bg,
                       const RenderSettings<T>& settings = {}) {
    if (!t) return render(cloud, camera, bg, settings);
    if (*t < T(0) || *t > T(1))
        throw std::invalid_argument("render_novel: timestamp must lie in [0, 1]");
    Deltas<T> d = deform(params, cloud.position, *t);
    return render(apply(cloud, &d), camera, bg, settings);
}

}  // namespace s4dgs
