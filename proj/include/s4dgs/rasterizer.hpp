#pragma once

// Differentiable perspective splatting. Gaussians are projected with the EWA
// Jacobian, depth-sorted (index tie-break), and alpha-blended front to back
// into RGB, depth, TI and alpha channels. render_backward produces the exact
// vector-Jacobian product for every per-Gaussian attribute.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "s4dgs/camera.hpp"
#include "s4dgs/cloud.hpp"
#include "s4dgs/core.hpp"
#include "s4dgs/image.hpp"

namespace s4dgs {

template <typename T>
struct Raster {
    Image<T> rgb;    // H x W x 3
    Image<T> depth;  // H x W, camera-space z
    Image<T> ti;     // H x W
    Image<T> alpha;  // H x W

    Raster() = default;
    Raster(int h, int w) : rgb(h, w, 3), depth(h, w, 1), ti(h, w, 1), alpha(h, w, 1) {}
    int height() const { return alpha.height; }
    int width() const { return alpha.width; }
};

template <typename T>
struct Background {
    Vec3<T> rgb{0, 0, 0};
    T ti = 0;
    T far_depth = 10;  // depth value of pixels nothing renders to
};

template <typename T>
struct RenderSettings {
    T z_near = T(0.01);
    T alpha_clamp = T(0.99);          // per-contribution ceiling
    T alpha_cut = T(1) / T(255);      // contributions below this are dropped
    T min_transmittance = T(1e-4);    // early termination threshold
    T lowpass = T(0.3);               // pixel^2 diagonal floor on cov2d
};

/// The attribute set the rasterizer consumes: canonical activations or the
/// deformed set produced by `apply`.
template <typename T>
struct RenderAttrs {
    std::vector<Vec3<T>> position;
    std::vector<Vec3<T>> scale;      // activated, > 0
    std::vector<Quat<T>> rotation;   // unnormalized; renderer normalizes
    std::vector<T> opacity;          // activated
    std::vector<Vec3<T>> color;
    std::vector<T> ti;               // activated

    size_t size() const { return position.size(); }
};

/// Gradients with respect to RenderAttrs (scale in activated domain,
/// rotation in the unnormalized quaternion domain).
template <typename T>
struct AttrGrads {
    std::vector<Vec3<T>> position;
    std::vector<Vec3<T>> scale;
    std::vector<Quat<T>> rotation;
    std::vector<T> opacity;
    std::vector<Vec3<T>> color;
    std::vector<T> ti;

    void resize(size_t n) {
        position.assign(n, Vec3<T>{0, 0, 0});
        scale.assign(n, Vec3<T>{0, 0, 0});
        rotation.assign(n, Quat<T>{0, 0, 0, 0});
        opacity.assign(n, T(0));
        color.assign(n, Vec3<T>{0, 0, 0});
        ti.assign(n, T(0));
    }
};

template <typename T>
struct ProjectedGaussian {
    Vec2<T> mean2d;
    Mat2<T> cov2d;
    T z{};
    uint32_t index = 0;
};

/// EWA projection of one Gaussian; nullopt when culled by the near plane.
template <typename T>
std::optional<ProjectedGaussian<T>> project(const Camera<T>& camera, const Vec3<T>& mu,
                                            const Mat3<T>& sigma,
                                            const RenderSettings<T>& settings = {}) {
    Mat3<T> w = camera.rotation();
    Vec3<T> t = w * mu + camera.translation();
    if (!(t.z > settings.z_near)) return std::nullopt;

    ProjectedGaussian<T> out;
    out.z = t.z;
    out.mean2d = {camera.fx * t.x / t.z + camera.cx, camera.fy * t.y / t.z + camera.cy};

    // J is the Jacobian of the pinhole map at the mean (2x3), A = J W.
    T jx = camera.fx / t.z, jy = camera.fy / t.z;
    T jxz = -camera.fx * t.x / (t.z * t.z), jyz = -camera.fy * t.y / (t.z * t.z);
    T a0 = jx * w(0, 0) + jxz * w(2, 0);
    T a1 = jx * w(0, 1) + jxz * w(2, 1);
    T a2 = jx * w(0, 2) + jxz * w(2, 2);
    T b0 = jy * w(1, 0) + jyz * w(2, 0);
    T b1 = jy * w(1, 1) + jyz * w(2, 1);
    T b2 = jy * w(1, 2) + jyz * w(2, 2);

    // cov2d = A Sigma A^T + lowpass I
    Vec3<T> sa = sigma * Vec3<T>{a0, a1, a2};
    Vec3<T> sb = sigma * Vec3<T>{b0, b1, b2};
    out.cov2d.m00 = a0 * sa.x + a1 * sa.y + a2 * sa.z + settings.lowpass;
    out.cov2d.m01 = a0 * sb.x + a1 * sb.y + a2 * sb.z;
    out.cov2d.m10 = out.cov2d.m01;
    out.cov2d.m11 = b0 * sb.x + b1 * sb.y + b2 * sb.z + settings.lowpass;
    return out;
}

namespace detail {

template <typename T>
struct ProjCache {
    bool visible = false;
    Vec2<T> mean2d;
    T ic_a{}, ic_b{}, ic_c{};  // inverse cov2d [[a,b],[b,c]]
    T z{};
    T q_max{};  // contributions with q above this fail the alpha cut
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

template <typename T>
struct Contribution {
    uint32_t gauss;  // index into the attribute arrays
    T alpha;
    T trans;         // transmittance in front of this contribution
};

}  // namespace detail

template <typename T>
struct ForwardRecord {
    int height = 0, width = 0;
    Camera<T> camera;
    Background<T> background;
    RenderSettings<T> settings;
    RenderAttrs<T> attrs;  // copied so backward is self-contained
    std::vector<detail::ProjCache<T>> proj;
    std::vector<uint32_t> offsets;                      // per pixel, into contribs
    std::vector<detail::Contribution<T>> contribs;      // front-to-back per pixel
    std::vector<T> final_transmittance;
};

namespace detail {

template <typename T>
void check_attrs_finite(const RenderAttrs<T>& attrs) {
    for (size_t i = 0; i < attrs.size(); ++i) {
        bool ok = std::isfinite(attrs.opacity[i]) && std::isfinite(attrs.ti[i]);
        for (int c = 0; c < 3; ++c)
            ok = ok && std::isfinite(attrs.position[i][c]) && std::isfinite(attrs.scale[i][c]) &&
                 std::isfinite(attrs.color[i][c]);
        for (int c = 0; c < 4; ++c) ok = ok && std::isfinite(attrs.rotation[i][c]);
        if (!ok) throw std::runtime_error(cat("render: non-finite attribute at gaussian ", i));
    }
}

}  // namespace detail

template <typename T>
Raster<T> render(const RenderAttrs<T>& attrs, const Camera<T>& camera, const Background<T>& bg,
                 const RenderSettings<T>& settings, ForwardRecord<T>* record = nullptr) {
    const size_t n = attrs.size();
    if (attrs.scale.size() != n || attrs.rotation.size() != n || attrs.opacity.size() != n ||
        attrs.color.size() != n || attrs.ti.size() != n)
        throw std::invalid_argument("render: attribute arrays disagree on count");
    detail::check_attrs_finite(attrs);

    const int h = camera.height, w = camera.width;
    std::vector<detail::ProjCache<T>> proj(n);

    for (size_t i = 0; i < n; ++i) {
        Quat<T> uq = normalized(attrs.rotation[i]);
        Mat3<T> sigma = covariance(attrs.scale[i], uq);
        auto p = project(camera, attrs.position[i], sigma, settings);
        if (!p) continue;
        T det = p->cov2d.det();
        if (!(det > T(0)) || !std::isfinite(det)) continue;

        detail::ProjCache<T>& pc = proj[i];
        pc.mean2d = p->mean2d;
        pc.z = p->z;
        pc.ic_a = p->cov2d.m11 / det;
        pc.ic_b = -p->cov2d.m01 / det;
        pc.ic_c = p->cov2d.m00 / det;

        T o = attrs.opacity[i];
        T rx, ry;
        if (settings.alpha_cut > T(0)) {
            if (!(o > settings.alpha_cut)) continue;  // can never pass the cut
            // axis extents of the q <= log(o / cut) ellipse
            pc.q_max = std::log(o / settings.alpha_cut);
            rx = std::sqrt(2 * pc.q_max * p->cov2d.m00);
            ry = std::sqrt(2 * pc.q_max * p->cov2d.m11);
        } else {
            pc.q_max = std::numeric_limits<T>::infinity();
            rx = ry = T(w + h);  // covers the whole image
        }
        pc.x0 = std::max(0, int(std::floor(pc.mean2d.x - rx)));
        pc.x1 = std::min(w - 1, int(std::ceil(pc.mean2d.x + rx)));
        pc.y0 = std::max(0, int(std::floor(pc.mean2d.y - ry)));
        pc.y1 = std::min(h - 1, int(std::ceil(pc.mean2d.y + ry)));
        pc.visible = pc.x0 <= pc.x1 && pc.y0 <= pc.y1;
    }

    // Global blend order: ascending depth, original index breaks ties.
    std::vector<uint32_t> order;
    order.reserve(n);
    for (uint32_t i = 0; i < n; ++i)
        if (proj[i].visible) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        return proj[a].z != proj[b].z ? proj[a].z < proj[b].z : a < b;
    });

    // Bin candidate gaussians per pixel (CSR), preserving the blend order.
    const size_t npix = size_t(h) * w;
    std::vector<uint32_t> counts(npix + 1, 0);
    for (uint32_t gi : order) {
        const auto& pc = proj[gi];
        for (int y = pc.y0; y <= pc.y1; ++y)
            for (int x = pc.x0; x <= pc.x1; ++x) counts[size_t(y) * w + x + 1]++;
    }
    std::vector<uint32_t> offsets(npix + 1, 0);
    for (size_t i = 0; i < npix; ++i) offsets[i + 1] = offsets[i] + counts[i + 1];
    std::vector<uint32_t> bins(offsets[npix]);
    {
        std::vector<uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (uint32_t gi : order) {
            const auto& pc = proj[gi];
            for (int y = pc.y0; y <= pc.y1; ++y)
                for (int x = pc.x0; x <= pc.x1; ++x) bins[cursor[size_t(y) * w + x]++] = gi;
        }
    }

    Raster<T> out(h, w);
    std::vector<uint32_t> rec_offsets;
    std::vector<detail::Contribution<T>> rec_contribs;
    std::vector<T> rec_final;
    if (record) {
        rec_offsets.assign(npix + 1, 0);
        rec_contribs.reserve(offsets[npix]);
        rec_final.assign(npix, T(1));
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t pix = size_t(y) * w + x;
            T px = T(x) + T(0.5), py = T(y) + T(0.5);
            T trans = 1;
            Vec3<T> rgb{0, 0, 0};
            T depth = 0, ti = 0;
            bool any = false;
            for (uint32_t k = offsets[pix]; k < offsets[pix + 1]; ++k) {
                const auto& pc = proj[bins[k]];
                T dx = px - pc.mean2d.x, dy = py - pc.mean2d.y;
                T q = T(0.5) * (pc.ic_a * dx * dx + 2 * pc.ic_b * dx * dy + pc.ic_c * dy * dy);
                if (q < T(0) || q > pc.q_max) continue;
                T alpha = attrs.opacity[bins[k]] * std::exp(-q);
                if (alpha > settings.alpha_clamp) alpha = settings.alpha_clamp;
                if (alpha < settings.alpha_cut || alpha == T(0)) continue;
                T weight = alpha * trans;
                rgb += attrs.color[bins[k]] * weight;
                depth += pc.z * weight;
                ti += attrs.ti[bins[k]] * weight;
                any = true;
                if (record) rec_contribs.push_back({bins[k], alpha, trans});
                trans *= (T(1) - alpha);
                if (trans < settings.min_transmittance) break;
            }
            out.rgb.at(y, x, 0) = rgb.x + trans * bg.rgb.x;
            out.rgb.at(y, x, 1) = rgb.y + trans * bg.rgb.y;
            out.rgb.at(y, x, 2) = rgb.z + trans * bg.rgb.z;
            out.ti.at(y, x) = ti + trans * bg.ti;
            out.depth.at(y, x) = any ? depth : bg.far_depth;
            out.alpha.at(y, x) = T(1) - trans;
            if (record) {
                rec_offsets[pix + 1] = uint32_t(rec_contribs.size());
                rec_final[pix] = trans;
            }
        }
    }

    if (record) {
        record->height = h;
        record->width = w;
        record->camera = camera;
        record->background = bg;
        record->settings = settings;
        record->attrs = attrs;
        record->proj = std::move(proj);
        record->offsets = std::move(rec_offsets);
        record->contribs = std::move(rec_contribs);
        record->final_transmittance = std::move(rec_final);
    }
    return out;
}

/// Convenience: raster adjoint container mirrors the raster channels.
template <typename T>
using RasterAdjoint = Raster<T>;

template <typename T>
AttrGrads<T> render_backward(const ForwardRecord<T>& record, const RasterAdjoint<T>& adjoint) {
    const int h = record.height, w = record.width;
    if (adjoint.rgb.height != h || adjoint.rgb.width != w || adjoint.rgb.channels != 3 ||
        !adjoint.depth.same_shape(adjoint.alpha) || adjoint.depth.height != h ||
        adjoint.depth.width != w || adjoint.ti.height != h || adjoint.ti.width != w)
        throw std::invalid_argument("render_backward: adjoint shape does not match the render");

    const RenderAttrs<T>& attrs = record.attrs;
    const size_t n = attrs.size();
    AttrGrads<T> grads;
    grads.resize(n);

    // Per-gaussian accumulators in the projected domain.
    std::vector<Vec2<T>> d_mean(n, Vec2<T>{0, 0});
    std::vector<Vec3<T>> d_cov(n, Vec3<T>{0, 0, 0});  // (d_a, d_b, d_c) of cov2d
    std::vector<T> d_z(n, T(0));

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t pix = size_t(y) * w + x;
            uint32_t lo = record.offsets[pix], hi = record.offsets[pix + 1];
            if (lo == hi) continue;
            T px = T(x) + T(0.5), py = T(y) + T(0.5);
            Vec3<T> a_rgb{adjoint.rgb.at(y, x, 0), adjoint.rgb.at(y, x, 1),
                          adjoint.rgb.at(y, x, 2)};
            T a_depth = adjoint.depth.at(y, x);
            T a_ti = adjoint.ti.at(y, x);
            T a_alpha = adjoint.alpha.at(y, x);

            // Suffix blend sums per channel, seeded with the background term.
            T t_final = record.final_transmittance[pix];
            Vec3<T> s_rgb = record.background.rgb * t_final;
            T s_ti = record.background.ti * t_final;
            T s_depth = 0, s_alpha = 0;
            // alpha channel: v == 1 and the residual term is -t_final... the
            // blend form alpha = sum w_i matches 1 - prod(1 - a_i) exactly.

            for (uint32_t k = hi; k-- > lo;) {
                const auto& con = record.contribs[k];
                uint32_t gi = con.gauss;
                const auto& pc = record.proj[gi];
                T alpha = con.alpha, trans = con.trans;
                T weight = alpha * trans;

                // dL/d(channel value) and dL/d(alpha_i)
                grads.color[gi] += a_rgb * weight;
                d_z[gi] += a_depth * weight;
                grads.ti[gi] += a_ti * weight;

                T one_minus = T(1) - alpha;
                T d_alpha = a_depth * (trans * pc.z) + a_ti * (trans * attrs.ti[gi]) +
                            a_alpha * trans;
                for (int c = 0; c < 3; ++c)
                    d_alpha += (&a_rgb.x)[c] * (trans * (&attrs.color[gi].x)[c]);
                if (one_minus > T(0)) {
                    T inv = T(1) / one_minus;
                    d_alpha -= (a_rgb.x * s_rgb.x + a_rgb.y * s_rgb.y + a_rgb.z * s_rgb.z +
                                a_depth * s_depth + a_ti * s_ti + a_alpha * s_alpha) *
                               inv;
                }

                // advance suffix sums to include this contribution
                s_rgb += attrs.color[gi] * weight;
                s_depth += pc.z * weight;
                s_ti += attrs.ti[gi] * weight;
                s_alpha += weight;

                // alpha = min(o * exp(-q), clamp); clamped contributions pass
                // no gradient to o or the footprint.
                if (alpha >= record.settings.alpha_clamp) continue;
                T o = attrs.opacity[gi];
                T g_exp = alpha / o;
                grads.opacity[gi] += d_alpha * g_exp;
                T d_q = -alpha * d_alpha;

                T dx = px - pc.mean2d.x, dy = py - pc.mean2d.y;
                T gx = pc.ic_a * dx + pc.ic_b * dy;  // Lambda d
                T gy = pc.ic_b * dx + pc.ic_c * dy;
                d_mean[gi].x -= d_q * gx;
                d_mean[gi].y -= d_q * gy;
                // dq/dcov2d = -1/2 (Lambda d)(Lambda d)^T
                d_cov[gi].x -= T(0.5) * d_q * gx * gx;
                d_cov[gi].y -= d_q * gx * gy;  // off-diagonal appears twice
                d_cov[gi].z -= T(0.5) * d_q * gy * gy;
            }
        }
    }

    // Projection backward per visible gaussian.
    const Camera<T>& cam = record.camera;
    Mat3<T> rot_cam = cam.rotation();
    for (size_t i = 0; i < n; ++i) {
        if (!record.proj[i].visible) continue;
        Quat<T> uq = normalized(attrs.rotation[i]);
        Mat3<T> rot = rotation_matrix(uq);
        Mat3<T> m = rot;
        const Vec3<T>& s = attrs.scale[i];
        for (int r = 0; r < 3; ++r) {
            m(r, 0) *= s.x;
            m(r, 1) *= s.y;
            m(r, 2) *= s.z;
        }
        Mat3<T> sigma = m * m.transposed();
        Vec3<T> t = rot_cam * attrs.position[i] + cam.translation();

        T jx = cam.fx / t.z, jy = cam.fy / t.z;
        T jxz = -cam.fx * t.x / (t.z * t.z), jyz = -cam.fy * t.y / (t.z * t.z);
        // A = J W (2x3)
        Vec3<T> arow{jx * rot_cam(0, 0) + jxz * rot_cam(2, 0),
                     jx * rot_cam(0, 1) + jxz * rot_cam(2, 1),
                     jx * rot_cam(0, 2) + jxz * rot_cam(2, 2)};
        Vec3<T> brow{jy * rot_cam(1, 0) + jyz * rot_cam(2, 0),
                     jy * rot_cam(1, 1) + jyz * rot_cam(2, 1),
                     jy * rot_cam(1, 2) + jyz * rot_cam(2, 2)};

        // cov2d entries are a = a^T Sigma a, b = a^T Sigma b, c = b^T Sigma b
        T da = d_cov[i].x, db = d_cov[i].y, dc = d_cov[i].z;
        Mat3<T> d_sigma;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                d_sigma(r, c) = da * (&arow.x)[r] * (&arow.x)[c] +
                                db * (&arow.x)[r] * (&brow.x)[c] +
                                dc * (&brow.x)[r] * (&brow.x)[c];

        // dA = 2 dC A Sigma (dC symmetric with db counted once on each side)
        Vec3<T> sa = sigma * arow, sb = sigma * brow;
        Vec3<T> d_arow = sa * (2 * da) + sb * db;
        Vec3<T> d_brow = sb * (2 * dc) + sa * db;

        // dJ entries from dA = dJ W  =>  dJ = dA W^T
        T d_jx = dot(d_arow, {rot_cam(0, 0), rot_cam(0, 1), rot_cam(0, 2)});
        T d_jxz = dot(d_arow, {rot_cam(2, 0), rot_cam(2, 1), rot_cam(2, 2)});
        T d_jy = dot(d_brow, {rot_cam(1, 0), rot_cam(1, 1), rot_cam(1, 2)});
        T d_jyz = dot(d_brow, {rot_cam(2, 0), rot_cam(2, 1), rot_cam(2, 2)});

        Vec3<T> d_t{0, 0, 0};
        T tz2 = t.z * t.z;
        d_t.x += d_jxz * (-cam.fx / tz2);
        d_t.y += d_jyz * (-cam.fy / tz2);
        d_t.z += d_jx * (-cam.fx / tz2) + d_jy * (-cam.fy / tz2) +
                 d_jxz * (2 * cam.fx * t.x / (tz2 * t.z)) + d_jyz * (2 * cam.fy * t.y / (tz2 * t.z));

        // mean2d and depth chains
        d_t.x += d_mean[i].x * (cam.fx / t.z);
        d_t.y += d_mean[i].y * (cam.fy / t.z);
        d_t.z += -(d_mean[i].x * cam.fx * t.x + d_mean[i].y * cam.fy * t.y) / tz2;
        d_t.z += d_z[i];

        grads.position[i] += rot_cam.transposed() * d_t;

        // Sigma = M M^T: dM = 2 sym(dSigma) M; dSigma built symmetric above.
        Mat3<T> d_m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                T acc = 0;
                for (int k = 0; k < 3; ++k) acc += (d_sigma(r, k) + d_sigma(k, r)) * m(k, c);
                d_m(r, c) = acc;
            }
        Mat3<T> d_rot;
        Vec3<T> d_scale{0, 0, 0};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                (&d_scale.x)[c] += d_m(r, c) * rot(r, c);
                d_rot(r, c) = d_m(r, c) * (&s.x)[c];
            }
        grads.scale[i] += d_scale;
        Quat<T> d_uq = rotation_matrix_backward(uq, d_rot);
        grads.rotation[i] += normalize_backward(attrs.rotation[i], d_uq);
    }
    return grads;
}

}  // namespace s4dgs
