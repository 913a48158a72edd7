// Command-line front end: synth, train, eval, render, gradcheck, plot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "s4dgs/checkpoint.hpp"
#include "s4dgs/gradcheck.hpp"
#include "s4dgs/metrics.hpp"
#include "s4dgs/plot.hpp"
#include "s4dgs/synth.hpp"
#include "s4dgs/train.hpp"

namespace fs = std::filesystem;
using Scalar = float;  // training dtype; gradcheck runs in double

namespace {

void apply_json_config(const nlohmann::json& j, s4dgs::TrainConfig<Scalar>& cfg) {
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("dataset", cfg.dataset_dir);
    get("out", cfg.out_dir);
    get("init_checkpoint", cfg.init_checkpoint);
    get("iterations", cfg.iterations);
    get("warmup", cfg.warmup);
    get("seed", cfg.seed);
    get("deterministic", cfg.deterministic);
    get("lambda_ssim", cfg.loss.lambda_ssim);
    get("lambda1", cfg.loss.lambda1);
    get("lambda2", cfg.loss.lambda2);
    get("pcc_epsilon", cfg.loss.pcc_epsilon);
    get("use_pcc", cfg.loss.use_pcc);
    get("noise_k", cfg.noise.k);
    get("noise_t", cfg.noise.t);
    get("c_noise", cfg.noise.c_noise);
    get("independent_draws", cfg.noise.independent_draws);
    get("anisotropic_noise", cfg.noise.anisotropic);
    get("pos_lr_init", cfg.lr.position.start);
    get("pos_lr_final", cfg.lr.position.end);
    if (j.contains("pos_lr_steps")) cfg.lr.position.steps = j.at("pos_lr_steps").get<int64_t>();
    get("scale_lr", cfg.lr.scale);
    get("rotation_lr", cfg.lr.rotation);
    get("opacity_lr", cfg.lr.opacity);
    get("color_lr", cfg.lr.color);
    get("ti_lr", cfg.lr.ti);
    get("mlp_lr", cfg.lr.mlp);
    if (j.contains("optimizer")) {
        std::string name = j.at("optimizer");
        if (name == "adam")
            cfg.optimizer = s4dgs::OptimizerKind::adam;
        else if (name == "sgd")
            cfg.optimizer = s4dgs::OptimizerKind::sgd;
        else
            throw std::runtime_error("config: unknown optimizer '" + name + "'");
    }
    get("prune_interval", cfg.prune_interval);
    get("prune_threshold", cfg.prune_threshold);
    get("eval_interval", cfg.eval_interval);
    get("init_count", cfg.init_count);
    if (j.contains("init_box")) {
        auto v = j.at("init_box").get<std::vector<double>>();
        if (v.size() != 6) throw std::runtime_error("config: init_box needs 6 numbers");
        cfg.init_box = {{Scalar(v[0]), Scalar(v[1]), Scalar(v[2])},
                        {Scalar(v[3]), Scalar(v[4]), Scalar(v[5])}};
    }
    get("mlp_depth", cfg.mlp.hidden_layers);
    get("mlp_width", cfg.mlp.width);
    get("pos_freqs", cfg.mlp.pos_freqs);
    get("time_freqs", cfg.mlp.time_freqs);
    get("proxy_a_lo", cfg.proxy.a_lo);
    get("proxy_a_hi", cfg.proxy.a_hi);
    get("proxy_b_lo", cfg.proxy.b_lo);
    get("proxy_b_hi", cfg.proxy.b_hi);
    get("proxy_seed", cfg.proxy.seed);
}

int run_synth(const std::string& out_dir, uint64_t seed, int count, const std::string& pattern,
              int width, int height, int train_frames, int eval_frames, double half_extent,
              double translation_amp, double rotation_amp, double orbit_radius, double fov_deg) {
    s4dgs::SceneSpec<Scalar> spec;
    spec.seed = seed;
    spec.gaussian_count = count;
    spec.width = width;
    spec.height = height;
    spec.train_frames = train_frames;
    spec.eval_frames = eval_frames;
    Scalar he = Scalar(half_extent);
    spec.box = {{-he, -he, -he}, {he, he, he}};
    spec.motion.translation_amp = Scalar(translation_amp);
    spec.motion.rotation_amp = Scalar(rotation_amp);
    spec.orbit.radius = Scalar(orbit_radius);
    spec.orbit.fov_deg = Scalar(fov_deg);
    if (pattern == "checker")
        spec.pattern = s4dgs::TexturePattern::checker;
    else if (pattern == "stripes")
        spec.pattern = s4dgs::TexturePattern::stripes;
    else if (pattern == "speckle")
        spec.pattern = s4dgs::TexturePattern::speckle;
    else
        throw std::runtime_error("synth: unknown pattern '" + pattern + "'");

    auto [cloud, traj] = s4dgs::generate_scene(spec);
    s4dgs::DatasetManifest manifest = s4dgs::render_dataset(cloud, traj, spec, out_dir);
    // Ground-truth checkpoint (canonical cloud + identity deformation).
    s4dgs::DeformationConfig mlp_cfg;
    auto identity = s4dgs::init_deformation<Scalar>(mlp_cfg, seed);
    s4dgs::save_checkpoint(cloud, identity, (fs::path(out_dir) / "gt.s4dgs").string());
    std::printf("synth: wrote %zu frames to %s\n", manifest.frames.size(), out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-frame dynamic gaussian splatting trainer"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dynamic scene dataset");
    std::string synth_out = "dataset";
    uint64_t synth_seed = 1;
    int synth_count = 800, synth_w = 96, synth_h = 96, synth_train = 10, synth_eval = 4;
    std::string synth_pattern = "checker";
    double synth_half = 1.0, synth_tr = 0.25, synth_rot = 0.35, synth_radius = 3.2, synth_fov = 50;
    synth->add_option("--out", synth_out, "Output dataset directory");
    synth->add_option("--seed", synth_seed, "Scene seed");
    synth->add_option("--count", synth_count, "Number of gaussians");
    synth->add_option("--pattern", synth_pattern, "checker|stripes|speckle");
    synth->add_option("--width", synth_w, "Frame width");
    synth->add_option("--height", synth_h, "Frame height");
    synth->add_option("--train-frames", synth_train, "Training frames");
    synth->add_option("--eval-frames", synth_eval, "Held-out frames");
    synth->add_option("--half-extent", synth_half, "Scene box half extent");
    synth->add_option("--translation-amp", synth_tr, "Rigid translation amplitude");
    synth->add_option("--rotation-amp", synth_rot, "Rigid rotation amplitude (rad)");
    synth->add_option("--orbit-radius", synth_radius, "Camera orbit radius");
    synth->add_option("--fov", synth_fov, "Field of view (degrees)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train on a dataset");
    std::string train_config_path, train_dataset, train_out, train_init;
    int train_iters = -1, train_warmup = -1;
    int64_t train_seed = -1;
    double f_lambda1 = -1, f_lambda2 = -1, f_cnoise = -1, f_pos_lr = -1;
    int train_count = -1;
    std::string f_optimizer;
    bool f_no_pcc = false;
    train_cmd->add_option("--config", train_config_path, "JSON config file (flags override)");
    train_cmd->add_option("--dataset", train_dataset, "Dataset directory");
    train_cmd->add_option("--out", train_out, "Output directory");
    train_cmd->add_option("--init", train_init, "Initial checkpoint");
    train_cmd->add_option("--iterations", train_iters, "Training iterations");
    train_cmd->add_option("--warmup", train_warmup, "Canonical-only warm-up iterations");
    train_cmd->add_option("--seed", train_seed, "Run seed");
    train_cmd->add_option("--lambda1", f_lambda1, "L_tex weight");
    train_cmd->add_option("--lambda2", f_lambda2, "L_tadr weight");
    train_cmd->add_option("--c-noise", f_cnoise, "TACO noise scale (0 disables)");
    train_cmd->add_option("--pos-lr", f_pos_lr, "Initial position learning rate");
    train_cmd->add_option("--init-count", train_count, "Gaussian count at initialization");
    train_cmd->add_option("--optimizer", f_optimizer, "adam|sgd");
    train_cmd->add_flag("--l1-texture", f_no_pcc, "Replace PCC with L1 in L_tex/L_tadr");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string eval_ckpt, eval_dataset, eval_split = "eval", eval_out;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
    eval_cmd->add_option("--dataset", eval_dataset, "Dataset directory")->required();
    eval_cmd->add_option("--split", eval_split, "train|eval");
    eval_cmd->add_option("--out", eval_out, "Optional CSV output path");

    // ---- render ----
    auto* render_cmd = app.add_subcommand("render", "Render a checkpoint from a dataset camera");
    std::string render_ckpt, render_dataset_dir, render_out = "render.png";
    std::string render_depth_out, render_ti_out;
    int render_frame = 0;
    double render_time = -1;
    bool render_canonical = false;
    render_cmd->add_option("--checkpoint", render_ckpt, "Checkpoint path")->required();
    render_cmd->add_option("--dataset", render_dataset_dir, "Dataset directory")->required();
    render_cmd->add_option("--frame", render_frame, "Manifest frame index for the camera");
    render_cmd->add_option("--time", render_time, "Timestamp override in [0,1]");
    render_cmd->add_flag("--canonical", render_canonical, "Render the canonical space");
    render_cmd->add_option("--out", render_out, "Output PNG");
    render_cmd->add_option("--depth-pfm", render_depth_out, "Also write the depth channel");
    render_cmd->add_option("--ti-pfm", render_ti_out, "Also write the TI channel");

    // ---- gradcheck ----
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all backwards");
    double grad_rel = 1e-3, grad_abs = 1e-6, grad_step = 1e-4;
    std::string grad_csv;
    grad_cmd->add_option("--rel", grad_rel, "Relative tolerance");
    grad_cmd->add_option("--abs", grad_abs, "Absolute tolerance");
    grad_cmd->add_option("--step", grad_step, "Finite-difference step scale");
    grad_cmd->add_option("--csv", grad_csv, "Write the report as CSV");

    // ---- plot ----
    auto* plot_cmd = app.add_subcommand("plot", "Plot metrics or build comparison strips");
    auto* curves = plot_cmd->add_subcommand("curves", "Line plot from metrics CSVs");
    std::vector<std::string> plot_csvs, plot_columns{"total"};
    std::string plot_out = "plot.png";
    curves->add_option("--csv", plot_csvs, "Metrics CSV paths")->required();
    curves->add_option("--column", plot_columns, "Columns to plot");
    curves->add_option("--out", plot_out, "Output PNG");
    auto* strip = plot_cmd->add_subcommand("strip", "Side-by-side image strip");
    std::vector<std::string> strip_images;
    std::string strip_out = "strip.png";
    int strip_height = 0;
    strip->add_option("--image", strip_images, "Input PNGs")->required();
    strip->add_option("--out", strip_out, "Output PNG");
    strip->add_option("--height", strip_height, "Target height (0 = min input height)");
    plot_cmd->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth)
            return run_synth(synth_out, synth_seed, synth_count, synth_pattern, synth_w, synth_h,
                             synth_train, synth_eval, synth_half, synth_tr, synth_rot, synth_radius,
                             synth_fov);

        if (*train_cmd) {
            s4dgs::TrainConfig<Scalar> cfg;
            if (!train_config_path.empty()) {
                std::ifstream in(train_config_path);
                if (!in) throw std::runtime_error("cannot open config " + train_config_path);
                nlohmann::json j;
                in >> j;
                apply_json_config(j, cfg);
            }
            if (!train_dataset.empty()) cfg.dataset_dir = train_dataset;
            if (!train_out.empty()) cfg.out_dir = train_out;
            if (!train_init.empty()) cfg.init_checkpoint = train_init;
            if (train_iters >= 0) cfg.iterations = train_iters;
            if (train_warmup >= 0) cfg.warmup = train_warmup;
            if (train_seed >= 0) cfg.seed = uint64_t(train_seed);
            if (f_lambda1 >= 0) cfg.loss.lambda1 = Scalar(f_lambda1);
            if (f_lambda2 >= 0) cfg.loss.lambda2 = Scalar(f_lambda2);
            if (f_cnoise >= 0) cfg.noise.c_noise = Scalar(f_cnoise);
            if (f_pos_lr > 0) cfg.lr.position.start = Scalar(f_pos_lr);
            if (train_count > 0) cfg.init_count = train_count;
            if (f_no_pcc) cfg.loss.use_pcc = false;
            if (!f_optimizer.empty())
                cfg.optimizer = f_optimizer == "sgd" ? s4dgs::OptimizerKind::sgd
                                                     : s4dgs::OptimizerKind::adam;
            if (cfg.dataset_dir.empty() || cfg.out_dir.empty())
                throw std::runtime_error("train: --dataset and --out are required");
            auto result = s4dgs::train(cfg);
            std::printf("train: wrote %s (probe psnr %.2f dB)\n", result.checkpoint_path.c_str(),
                        result.final_probe_psnr);
            return 0;
        }

        if (*eval_cmd) {
            auto [cloud, params] = s4dgs::load_checkpoint<Scalar>(eval_ckpt);
            auto manifest =
                s4dgs::load_manifest((fs::path(eval_dataset) / "manifest.json").string());
            auto table = s4dgs::evaluate(cloud, params, eval_dataset, manifest, eval_split);
            std::string csv = "frame,time,psnr,ssim\n";
            char line[128];
            for (const auto& r : table.rows) {
                std::snprintf(line, sizeof(line), "%d,%.6f,%.4f,%.6f\n", r.frame, r.time, r.psnr_db,
                              r.ssim_val);
                csv += line;
            }
            std::snprintf(line, sizeof(line), "mean,,%.4f,%.6f\n", table.mean_psnr,
                          table.mean_ssim);
            csv += line;
            std::fputs(csv.c_str(), stdout);
            if (!eval_out.empty()) {
                std::ofstream out(eval_out, std::ios::trunc);
                out << csv;
            }
            return 0;
        }

        if (*render_cmd) {
            auto [cloud, params] = s4dgs::load_checkpoint<Scalar>(render_ckpt);
            auto manifest =
                s4dgs::load_manifest((fs::path(render_dataset_dir) / "manifest.json").string());
            if (render_frame < 0 || size_t(render_frame) >= manifest.frames.size())
                throw std::runtime_error("render: frame index out of range");
            auto cam = s4dgs::frame_camera<Scalar>(manifest.frames[render_frame]);
            s4dgs::Background<Scalar> bg;
            bg.rgb = {Scalar(manifest.background[0]), Scalar(manifest.background[1]),
                      Scalar(manifest.background[2])};
            bg.far_depth = Scalar(manifest.far_depth);
            std::optional<Scalar> t;
            if (!render_canonical)
                t = render_time >= 0 ? Scalar(render_time) : cam.time;
            auto raster = s4dgs::render_novel(cloud, params, cam, t, bg);
            s4dgs::io::save_png(raster.rgb, render_out);
            if (!render_depth_out.empty()) s4dgs::io::save_pfm(raster.depth, render_depth_out);
            if (!render_ti_out.empty()) s4dgs::io::save_pfm(raster.ti, render_ti_out);
            std::printf("render: wrote %s\n", render_out.c_str());
            return 0;
        }

        if (*grad_cmd) {
            s4dgs::CheckTolerances tol;
            tol.rel = grad_rel;
            tol.abs = grad_abs;
            tol.step = grad_step;
            auto report = s4dgs::check_all(tol);
            std::fputs(report.text().c_str(), stdout);
            if (!grad_csv.empty()) {
                std::ofstream out(grad_csv, std::ios::trunc);
                out << report.csv();
            }
            return report.pass() ? 0 : 2;
        }

        if (*plot_cmd) {
            if (*curves) {
                s4dgs::plot_curves(plot_csvs, plot_columns, plot_out);
                std::printf("plot: wrote %s\n", plot_out.c_str());
            } else if (*strip) {
                s4dgs::side_by_side(strip_images, strip_out, strip_height);
                std::printf("plot: wrote %s\n", strip_out.c_str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
