#pragma once

// Finite-difference oracle for every analytic backward pass. Uses forward
// evaluations only, in 64-bit deterministic mode. Non-smooth parameters
// (alpha clamp boundary, sqrt kinks, blend-order ties) are detected by
// probing both h and h/2 and excluded with a note.

#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "s4dgs/apply.hpp"
#include "s4dgs/cloud.hpp"
#include "s4dgs/deformation.hpp"
#include "s4dgs/losses.hpp"
#include "s4dgs/rasterizer.hpp"
#include "s4dgs/rng.hpp"

namespace s4dgs {

struct CheckTolerances {
    double rel = 1e-3;
    double abs = 1e-6;
    double step = 1e-4;  // scaled by each parameter's magnitude
};

struct GroupReport {
    std::string group;
    size_t checked = 0;
    size_t excluded = 0;  // non-smooth parameters skipped
    double max_rel = 0;
    double max_abs = 0;
    double step = 0;
    std::vector<size_t> failing;

    bool passed() const { return failing.empty(); }
};

struct CheckReport {
    std::vector<GroupReport> groups;

    bool pass() const {
        for (const auto& g : groups)
            if (!g.passed()) return false;
        return !groups.empty();
    }
    std::string text() const {
        std::string out;
        char line[256];
        for (const auto& g : groups) {
            std::snprintf(line, sizeof(line),
                          "%-18s %s  checked=%zu excluded=%zu max_rel=%.3e max_abs=%.3e\n",
                          g.group.c_str(), g.passed() ? "PASS" : "FAIL", g.checked, g.excluded,
                          g.max_rel, g.max_abs);
            out += line;
        }
        return out;
    }
    std::string csv() const {
        std::string out = "group,checked,excluded,max_rel,max_abs,failing,pass\n";
        char line[256];
        for (const auto& g : groups) {
            std::snprintf(line, sizeof(line), "%s,%zu,%zu,%.9e,%.9e,%zu,%d\n", g.group.c_str(),
                          g.checked, g.excluded, g.max_rel, g.max_abs, g.failing.size(),
                          g.passed() ? 1 : 0);
            out += line;
        }
        return out;
    }
};

/// Central difference of `fn` along parameter *x.
template <typename Fn>
double finite_diff(Fn&& fn, double* x, double h) {
    double orig = *x;
    *x = orig + h;
    double fp = fn();
    *x = orig - h;
    double fm = fn();
    *x = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff: non-finite forward evaluation");
    return (fp - fm) / (2 * h);
}

/// Compares analytic gradients against central differences over a group of
/// live parameter locations. `fn` re-evaluates the scalar from current state.
template <typename Fn>
GroupReport check_group(const std::string& name, const std::vector<double*>& params,
                        const std::vector<double>& analytic, Fn&& fn,
                        const CheckTolerances& tol = {}) {
    if (params.size() != analytic.size())
        throw std::invalid_argument("check_group: analytic gradient count mismatch");
    GroupReport rep;
    rep.group = name;
    rep.step = tol.step;
    auto agree = [&](double a, double f) {
        double abs_err = std::abs(a - f);
        double rel_err = abs_err / std::max(std::abs(a), std::abs(f));
        return abs_err <= tol.abs || rel_err <= tol.rel;
    };
    for (size_t i = 0; i < params.size(); ++i) {
        double h = tol.step * std::max(1.0, std::abs(*params[i]));
        double d1 = finite_diff(fn, params[i], h);
        double a = analytic[i];
        double used = d1;
        if (!agree(a, d1)) {
            double d2 = finite_diff(fn, params[i], h / 2);  // one retry at h/2
            if (agree(a, d2)) {
                used = d2;
            } else {
                double denom = std::max({std::abs(d1), std::abs(d2), 1e-8});
                if (std::abs(d1 - d2) / denom > 20 * tol.rel) {
                    // FD disagrees with itself: a non-smooth point, not a bug.
                    rep.excluded++;
                    continue;
                }
                used = d2;
            }
        }
        rep.checked++;
        double abs_err = std::abs(a - used);
        double rel_err = abs_err / std::max({std::abs(a), std::abs(used), 1e-300});
        if (!(abs_err <= tol.abs || rel_err <= tol.rel)) rep.failing.push_back(i);
        rep.max_abs = std::max(rep.max_abs, abs_err);
        if (abs_err > tol.abs) rep.max_rel = std::max(rep.max_rel, rel_err);
    }
    return rep;
}

/// The seeded 5-Gaussian / 16x16 fixture shared by the gradient suite.
struct CheckFixture {
    GaussianCloud<double> cloud;
    Camera<double> camera;
    Background<double> bg;
    RenderSettings<double> settings;
    GtFrame<double> gt;
    LossConfig<double> loss;
    DeformationParams<double> mlp;
    double time = 0.37;
    Raster<double> probe;  // fixed random adjoint weights
};

inline CheckFixture make_check_fixture(uint64_t seed = 11) {
    CheckFixture f;
    Rng rng(seed);
    const int n = 5, hw = 16;

    f.camera.fx = f.camera.fy = 18;
    f.camera.cx = f.camera.cy = 8;
    f.camera.width = f.camera.height = hw;
    f.camera.time = f.time;

    f.cloud.resize(n);
    for (int i = 0; i < n; ++i) {
        f.cloud.position[i] = {rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1),
                               rng.uniform(3.2, 4.8)};
        for (int c = 0; c < 3; ++c) f.cloud.raw_scale[i][c] = std::log(rng.uniform(0.25, 0.6));
        Quat<double> q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        f.cloud.rotation[i] = q;  // deliberately unnormalized
        f.cloud.raw_opacity[i] = logit(rng.uniform(0.3, 0.8));
        f.cloud.color[i] = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
        f.cloud.raw_ti[i] = logit(rng.uniform(0.3, 0.7));
    }

    // Smooth mode: no cut, no early termination, so FD sees no set changes.
    f.settings.alpha_cut = 0;
    f.settings.min_transmittance = 0;
    f.bg.rgb = {0.05, 0.1, 0.15};
    f.bg.far_depth = 8;

    f.gt.rgb = Image<double>(hw, hw, 3);
    for (auto& v : f.gt.rgb.data) v = rng.uniform(0.0, 1.0);
    f.gt.ti = ti_of_rgb(f.gt.rgb);
    f.gt.depth_proxy = Image<double>(hw, hw, 1);
    for (int i = 0; i < hw; ++i)
        for (int j = 0; j < hw; ++j)
            f.gt.depth_proxy.at(i, j) =
                4.0 + 0.8 * std::sin(0.7 * i + 0.3) + 0.6 * std::cos(0.9 * j) +
                0.05 * rng.uniform(-1.0, 1.0);

    DeformationConfig cfg;
    cfg.hidden_layers = 2;
    cfg.width = 16;
    cfg.pos_freqs = 6;
    cfg.time_freqs = 4;
    f.mlp = init_deformation<double>(cfg, seed + 1);
    // Non-zero heads so deformation gradients are exercised away from zero.
    for (auto* head : {&f.mlp.head_dx, &f.mlp.head_dr, &f.mlp.head_ds})
        for (auto& w : head->w) w = rng.uniform(-0.02, 0.02);

    f.probe = Raster<double>(hw, hw);
    for (auto* img : {&f.probe.rgb, &f.probe.depth, &f.probe.ti, &f.probe.alpha})
        for (auto& v : img->data) v = rng.uniform(-1.0, 1.0);
    return f;
}

namespace detail {

inline double raster_probe(const Raster<double>& r, const Raster<double>& w) {
    double acc = 0;
    for (size_t i = 0; i < r.rgb.data.size(); ++i) acc += r.rgb.data[i] * w.rgb.data[i];
    for (size_t i = 0; i < r.depth.data.size(); ++i) acc += r.depth.data[i] * w.depth.data[i];
    for (size_t i = 0; i < r.ti.data.size(); ++i) acc += r.ti.data[i] * w.ti.data[i];
    for (size_t i = 0; i < r.alpha.data.size(); ++i) acc += r.alpha.data[i] * w.alpha.data[i];
    return acc;
}

struct CloudParamGroup {
    std::string name;
    std::vector<double*> ptrs;
    std::vector<double> analytic;
};

inline std::vector<CloudParamGroup> cloud_groups(GaussianCloud<double>& cloud,
                                                 const CloudGrads<double>& grads,
                                                 const char* prefix) {
    std::vector<CloudParamGroup> out(6);
    out[0].name = std::string(prefix) + "/position";
    out[1].name = std::string(prefix) + "/raw_scale";
    out[2].name = std::string(prefix) + "/rotation";
    out[3].name = std::string(prefix) + "/raw_opacity";
    out[4].name = std::string(prefix) + "/color";
    out[5].name = std::string(prefix) + "/raw_ti";
    for (size_t i = 0; i < cloud.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            out[0].ptrs.push_back(&cloud.position[i][c]);
            out[0].analytic.push_back(grads.position[i][c]);
            out[1].ptrs.push_back(&cloud.raw_scale[i][c]);
            out[1].analytic.push_back(grads.raw_scale[i][c]);
            out[4].ptrs.push_back(&cloud.color[i][c]);
            out[4].analytic.push_back(grads.color[i][c]);
        }
        for (int c = 0; c < 4; ++c) {
            out[2].ptrs.push_back(&cloud.rotation[i][c]);
            out[2].analytic.push_back(grads.rotation[i][c]);
        }
        out[3].ptrs.push_back(&cloud.raw_opacity[i]);
        out[3].analytic.push_back(grads.raw_opacity[i]);
        out[5].ptrs.push_back(&cloud.raw_ti[i]);
        out[5].analytic.push_back(grads.raw_ti[i]);
    }
    return out;
}

}  // namespace detail

/// Runs the full suite: rasterizer attribute groups, every loss, positional
/// encoding, the deformation MLP, and the end-to-end deformed-render chain
/// (with the stop-gradient contract applied to positions).
inline CheckReport check_all(const CheckTolerances& tol = {}) {
    CheckReport report;
    CheckFixture fix = make_check_fixture();

    // --- rasterizer: linear probe of all channels, canonical render ---
    {
        auto render_probe = [&]() {
            return detail::raster_probe(
                render(apply<double>(fix.cloud, nullptr), fix.camera, fix.bg, fix.settings),
                fix.probe);
        };
        ForwardRecord<double> rec;
        ApplyContext<double> ctx;
        RenderAttrs<double> attrs = apply<double>(fix.cloud, nullptr, &ctx);
        render(attrs, fix.camera, fix.bg, fix.settings, &rec);
        AttrGrads<double> agrads = render_backward(rec, fix.probe);
        CloudGrads<double> grads = apply_backward(fix.cloud, ctx, attrs, agrads);
        for (auto& grp : detail::cloud_groups(fix.cloud, grads, "raster"))
            report.groups.push_back(check_group(grp.name, grp.ptrs, grp.analytic, render_probe, tol));
    }

    // --- losses on image inputs ---
    {
        Raster<double> raster =
            render(apply<double>(fix.cloud, nullptr), fix.camera, fix.bg, fix.settings);

        auto image_group = [&](const std::string& name, Image<double>& img,
                               const Image<double>& analytic, auto&& fn) {
            std::vector<double*> ptrs;
            std::vector<double> a;
            for (size_t i = 0; i < img.data.size(); ++i) {
                ptrs.push_back(&img.data[i]);
                a.push_back(analytic.data[i]);
            }
            report.groups.push_back(check_group(name, ptrs, a, fn, tol));
        };

        Image<double> rgb = raster.rgb;
        image_group("loss/rgb", rgb, rgb_loss_backward(rgb, fix.gt.rgb, fix.loss.lambda_ssim, 1.0),
                    [&]() { return rgb_loss(rgb, fix.gt.rgb, fix.loss.lambda_ssim); });

        Image<double> ti = raster.ti;
        image_group("loss/tex", ti, tex_loss_backward(ti, fix.gt.ti, fix.loss, 1.0),
                    [&]() { return tex_loss(ti, fix.gt.ti, fix.loss); });

        // A smooth depth field: rendered depth carries flat background regions
        // whose zero Sobel magnitude sits on the sqrt kink. The rendered-depth
        // path is still exercised by loss/total and the e2e chain.
        Image<double> depth(raster.depth.height, raster.depth.width, 1);
        for (int i = 0; i < depth.height; ++i)
            for (int j = 0; j < depth.width; ++j)
                depth.at(i, j) = 5.0 + 0.9 * std::sin(0.6 * i + 0.2) + 0.7 * std::cos(0.5 * j);
        image_group("loss/tadr", depth,
                    tadr_loss_backward(depth, fix.gt.depth_proxy, fix.loss, 1.0),
                    [&]() { return tadr_loss(depth, fix.gt.depth_proxy, fix.loss); });

        // pcc on plain arrays
        Rng rng(23);
        std::vector<double> x(64), y(64), dx(64, 0.0);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        pcc_backward<double>(x, y, fix.loss.pcc_epsilon, 1.0, dx.data(), nullptr);
        std::vector<double*> ptrs;
        for (auto& v : x) ptrs.push_back(&v);
        report.groups.push_back(check_group(
            "loss/pcc", ptrs, dx,
            [&]() { return pcc<double>(x, y, fix.loss.pcc_epsilon); }, tol));

        // total loss: adjoint raster against FD over every channel
        Raster<double> work = raster;
        RasterAdjoint<double> adj;
        total_loss(work, fix.gt, fix.loss, &adj);
        auto total_fn = [&]() { return total_loss(work, fix.gt, fix.loss).total; };
        std::vector<double*> tptrs;
        std::vector<double> ta;
        auto add_plane = [&](Image<double>& img, const Image<double>& a) {
            for (size_t i = 0; i < img.data.size(); ++i) {
                tptrs.push_back(&img.data[i]);
                ta.push_back(a.data[i]);
            }
        };
        add_plane(work.rgb, adj.rgb);
        add_plane(work.depth, adj.depth);
        add_plane(work.ti, adj.ti);
        add_plane(work.alpha, adj.alpha);
        report.groups.push_back(check_group("loss/total", tptrs, ta, total_fn, tol));
    }

    // --- positional encoding ---
    {
        Rng rng(31);
        double v[3] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const int L = 10;
        std::vector<double> w(encoding_dim(3, L));
        for (auto& x : w) x = rng.uniform(-1.0, 1.0);
        auto fn = [&]() {
            std::vector<double> enc(w.size());
            positional_encoding(v, 3, L, enc.data());
            double acc = 0;
            for (size_t i = 0; i < w.size(); ++i) acc += w[i] * enc[i];
            return acc;
        };
        std::vector<double> enc(w.size()), dv(3);
        positional_encoding(v, 3, L, enc.data());
        positional_encoding_backward(v, 3, L, w.data(), dv.data());
        // The natural scale of an encoding input is set by its highest
        // frequency band 2^(L-1) pi; the step shrinks accordingly.
        CheckTolerances enc_tol = tol;
        enc_tol.step = tol.step / double(1 << (L - 1));
        report.groups.push_back(
            check_group("encoding", {&v[0], &v[1], &v[2]}, dv, fn, enc_tol));
    }

    // --- deformation MLP: linear probe of the deltas ---
    {
        Rng rng(41);
        Deltas<double> w;
        w.resize(fix.cloud.size());
        for (size_t i = 0; i < w.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                w.dx[i][c] = rng.uniform(-1.0, 1.0);
                w.ds[i][c] = rng.uniform(-1.0, 1.0);
            }
            for (int c = 0; c < 4; ++c) w.dr[i][c] = rng.uniform(-1.0, 1.0);
        }
        auto fn = [&]() {
            Deltas<double> d = deform(fix.mlp, fix.cloud.position, fix.time);
            double acc = 0;
            for (size_t i = 0; i < d.size(); ++i) {
                for (int c = 0; c < 3; ++c) acc += d.dx[i][c] * w.dx[i][c] + d.ds[i][c] * w.ds[i][c];
                for (int c = 0; c < 4; ++c) acc += d.dr[i][c] * w.dr[i][c];
            }
            return acc;
        };
        DeformRecord<double> rec;
        deform(fix.mlp, fix.cloud.position, fix.time, &rec);
        DeformationParams<double> grads = deform_backward(fix.mlp, rec, w);
        std::vector<double*> ptrs;
        std::vector<double> analytic;
        fix.mlp.for_each_tensor([&](std::vector<double>& p) {
            for (auto& v : p) ptrs.push_back(&v);
        });
        grads.for_each_tensor([&](const std::vector<double>& g) {
            for (double v : g) analytic.push_back(v);
        });
        report.groups.push_back(check_group("deform/mlp", ptrs, analytic, fn, tol));
    }

    // --- end-to-end: total loss of the deformed render ---
    {
        auto forward = [&](const Deltas<double>* frozen) {
            Deltas<double> d =
                frozen ? *frozen : deform(fix.mlp, fix.cloud.position, fix.time);
            RenderAttrs<double> attrs = apply(fix.cloud, &d);
            Raster<double> raster = render(attrs, fix.camera, fix.bg, fix.settings);
            return total_loss(raster, fix.gt, fix.loss).total;
        };

        // analytic chain
        DeformRecord<double> drec;
        Deltas<double> deltas = deform(fix.mlp, fix.cloud.position, fix.time, &drec);
        ApplyContext<double> ctx;
        RenderAttrs<double> attrs = apply(fix.cloud, &deltas, &ctx);
        ForwardRecord<double> rrec;
        Raster<double> raster = render(attrs, fix.camera, fix.bg, fix.settings, &rrec);
        RasterAdjoint<double> adj;
        total_loss(raster, fix.gt, fix.loss, &adj);
        AttrGrads<double> agrads = render_backward(rrec, adj);
        Deltas<double> d_deltas;
        CloudGrads<double> cgrads = apply_backward(fix.cloud, ctx, attrs, agrads, &d_deltas);
        DeformationParams<double> mgrads = deform_backward(fix.mlp, drec, d_deltas);

        // Positions: FD with deltas frozen (the stop-gradient contract).
        Deltas<double> frozen = deltas;
        auto groups = detail::cloud_groups(fix.cloud, cgrads, "e2e");
        for (auto& grp : groups) {
            bool is_pos = grp.name == "e2e/position";
            auto fn = [&, is_pos]() { return forward(is_pos ? &frozen : nullptr); };
            report.groups.push_back(check_group(grp.name, grp.ptrs, grp.analytic, fn, tol));
        }

        std::vector<double*> mptrs;
        std::vector<double> manalytic;
        fix.mlp.for_each_tensor([&](std::vector<double>& p) {
            for (auto& v : p) mptrs.push_back(&v);
        });
        mgrads.for_each_tensor([&](const std::vector<double>& g) {
            for (double v : g) manalytic.push_back(v);
        });
        report.groups.push_back(check_group(
            "e2e/mlp", mptrs, manalytic, [&]() { return forward(nullptr); }, tol));
    }

    return report;
}

}  // namespace s4dgs
