#pragma once

// Builds the attribute set the rasterizer consumes: canonical activations, or
// the deformed set {mu + dx, s + ds, r + dr, o, c, TI}. Scale offsets act in
// the activated domain with a positivity floor; rotations are renormalized
// inside the renderer.

#include <cmath>
#include <stdexcept>

#include "s4dgs/cloud.hpp"
#include "s4dgs/deformation.hpp"
#include "s4dgs/rasterizer.hpp"

namespace s4dgs {

inline constexpr double kScaleFloor = 1e-6;

template <typename T>
struct ApplyContext {
    bool deformed = false;
    std::vector<Vec3<T>> s_exp;       // exp(raw_scale), for the chain rule
    std::vector<T> opacity;           // activated, reused in backward
    std::vector<T> ti;
};

template <typename T>
RenderAttrs<T> apply(const GaussianCloud<T>& cloud, const Deltas<T>* deltas,
                     ApplyContext<T>* ctx = nullptr) {
    cloud.check_consistent();
    const size_t n = cloud.size();
    if (deltas && deltas->size() != n)
        throw std::invalid_argument("apply: delta count " + std::to_string(deltas->size()) +
                                    " does not match cloud count " + std::to_string(n));
    RenderAttrs<T> attrs;
    attrs.position.resize(n);
    attrs.scale.resize(n);
    attrs.rotation.resize(n);
    attrs.opacity.resize(n);
    attrs.color = cloud.color;
    attrs.ti.resize(n);
    if (ctx) {
        ctx->deformed = deltas != nullptr;
        ctx->s_exp.resize(n);
        ctx->opacity.resize(n);
        ctx->ti.resize(n);
    }
    for (size_t i = 0; i < n; ++i) {
        Vec3<T> s{std::exp(cloud.raw_scale[i].x), std::exp(cloud.raw_scale[i].y),
                  std::exp(cloud.raw_scale[i].z)};
        if (deltas) {
            attrs.position[i] = cloud.position[i] + deltas->dx[i];
            attrs.rotation[i] = cloud.rotation[i] + deltas->dr[i];
            Vec3<T> sd = s + deltas->ds[i];
            attrs.scale[i] = {std::max(sd.x, T(kScaleFloor)), std::max(sd.y, T(kScaleFloor)),
                              std::max(sd.z, T(kScaleFloor))};
        } else {
            attrs.position[i] = cloud.position[i];
            attrs.rotation[i] = cloud.rotation[i];
            attrs.scale[i] = s;
        }
        attrs.opacity[i] = sigmoid(cloud.raw_opacity[i]);
        attrs.ti[i] = sigmoid(cloud.raw_ti[i]);
        if (ctx) {
            ctx->s_exp[i] = s;
            ctx->opacity[i] = attrs.opacity[i];
            ctx->ti[i] = attrs.ti[i];
        }
    }
    return attrs;
}

/// Maps attribute-domain gradients back to raw cloud parameters and, when the
/// render was deformed, to the per-Gaussian deltas.
template <typename T>
CloudGrads<T> apply_backward(const GaussianCloud<T>& cloud, const ApplyContext<T>& ctx,
                             const RenderAttrs<T>& attrs, const AttrGrads<T>& d_attrs,
                             Deltas<T>* d_deltas = nullptr) {
    const size_t n = cloud.size();
    CloudGrads<T> g;
    g.resize(n);
    if (d_deltas) d_deltas->resize(n);
    for (size_t i = 0; i < n; ++i) {
        g.position[i] = d_attrs.position[i];
        g.rotation[i] = d_attrs.rotation[i];
        for (int c = 0; c < 3; ++c) {
            // d(activated scale)/d(raw) = s_exp; the floor clamp gates both paths
            bool clamped = ctx.deformed && attrs.scale[i][c] <= T(kScaleFloor);
            T ds = clamped ? T(0) : d_attrs.scale[i][c];
            g.raw_scale[i][c] = ds * ctx.s_exp[i][c];
            if (d_deltas) d_deltas->ds[i][c] = ds;
        }
        T o = ctx.opacity[i];
        g.raw_opacity[i] = d_attrs.opacity[i] * o * (T(1) - o);
        T ti = ctx.ti[i];
        g.raw_ti[i] = d_attrs.ti[i] * ti * (T(1) - ti);
        g.color[i] = d_attrs.color[i];
        if (d_deltas) {
            d_deltas->dx[i] = d_attrs.position[i];
            d_deltas->dr[i] = d_attrs.rotation[i];
        }
    }
    return g;
}

/// Canonical-space render of a cloud (no deformation).
template <typename T>
Raster<T> render(const GaussianCloud<T>& cloud, const Camera<T>& camera, const Background<T>& bg,
                 const RenderSettings<T>& settings) {
    return render(apply<T>(cloud, nullptr), camera, bg, settings);
}

}  // namespace s4dgs
