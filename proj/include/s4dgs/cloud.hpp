#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "s4dgs/core.hpp"
#include "s4dgs/rng.hpp"

namespace s4dgs {

/// Canonical Gaussian field. Scale and opacity/TI live in raw (log / logit)
/// domain; rotations are stored unnormalized and normalized on use.
template <typename T>
struct GaussianCloud {
    std::vector<Vec3<T>> position;
    std::vector<Vec3<T>> raw_scale;   // activated s = exp(raw_scale)
    std::vector<Quat<T>> rotation;    // normalized on use
    std::vector<T> raw_opacity;       // activated o = sigmoid(raw_opacity)
    std::vector<Vec3<T>> color;       // plain RGB in [0, 1]
    std::vector<T> raw_ti;            // activated TI = sigmoid(raw_ti)

    size_t size() const { return position.size(); }

    void resize(size_t n) {
        position.resize(n);
        raw_scale.resize(n);
        rotation.resize(n);
        raw_opacity.resize(n);
        color.resize(n);
        raw_ti.resize(n);
    }

    void check_consistent() const {
        size_t n = position.size();
        if (raw_scale.size() != n || rotation.size() != n || raw_opacity.size() != n ||
            color.size() != n || raw_ti.size() != n)
            throw std::logic_error("gaussian cloud: per-gaussian arrays disagree on count");
    }

    template <typename U>
    GaussianCloud<U> cast() const {
        GaussianCloud<U> out;
        out.resize(size());
        for (size_t i = 0; i < size(); ++i) {
            out.position[i] = {U(position[i].x), U(position[i].y), U(position[i].z)};
            out.raw_scale[i] = {U(raw_scale[i].x), U(raw_scale[i].y), U(raw_scale[i].z)};
            out.rotation[i] = {U(rotation[i].w), U(rotation[i].x), U(rotation[i].y),
                               U(rotation[i].z)};
            out.raw_opacity[i] = U(raw_opacity[i]);
            out.color[i] = {U(color[i].x), U(color[i].y), U(color[i].z)};
            out.raw_ti[i] = U(raw_ti[i]);
        }
        return out;
    }
};

/// Gradients of the raw cloud parameters, one entry per field.
template <typename T>
struct CloudGrads {
    std::vector<Vec3<T>> position;
    std::vector<Vec3<T>> raw_scale;
    std::vector<Quat<T>> rotation;
    std::vector<T> raw_opacity;
    std::vector<Vec3<T>> color;
    std::vector<T> raw_ti;

    void resize(size_t n) {
        position.assign(n, Vec3<T>{0, 0, 0});
        raw_scale.assign(n, Vec3<T>{0, 0, 0});
        rotation.assign(n, Quat<T>{0, 0, 0, 0});
        raw_opacity.assign(n, T(0));
        color.assign(n, Vec3<T>{0, 0, 0});
        raw_ti.assign(n, T(0));
    }
};

/// Activated per-Gaussian views: s = exp(raw_scale), o = sigmoid(raw_opacity),
/// TI = sigmoid(raw_ti), unit rotation. Never mutates the raw storage.
template <typename T>
struct Activated {
    std::vector<Vec3<T>> scale;
    std::vector<T> opacity;
    std::vector<T> ti;
    std::vector<Quat<T>> unit_rotation;
};

template <typename T>
Activated<T> activate(const GaussianCloud<T>& cloud) {
    cloud.check_consistent();
    size_t n = cloud.size();
    Activated<T> out;
    out.scale.resize(n);
    out.opacity.resize(n);
    out.ti.resize(n);
    out.unit_rotation.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.scale[i] = {std::exp(cloud.raw_scale[i].x), std::exp(cloud.raw_scale[i].y),
                        std::exp(cloud.raw_scale[i].z)};
        out.opacity[i] = sigmoid(cloud.raw_opacity[i]);
        out.ti[i] = sigmoid(cloud.raw_ti[i]);
        T n2 = norm(cloud.rotation[i]);
        if (!(n2 > T(0)))
            throw std::runtime_error(cat("activate: zero-norm rotation quaternion at gaussian ", i));
        out.unit_rotation[i] = normalized(cloud.rotation[i]);
    }
    return out;
}

/// Sigma = R diag(s) diag(s) R^T, the anisotropic 3D covariance.
template <typename T>
Mat3<T> covariance(const Vec3<T>& s, const Quat<T>& unit_r) {
    Mat3<T> r = rotation_matrix(unit_r);
    Mat3<T> m = r;  // columns scaled: M = R diag(s)
    for (int row = 0; row < 3; ++row) {
        m(row, 0) *= s.x;
        m(row, 1) *= s.y;
        m(row, 2) *= s.z;
    }
    return m * m.transposed();
}

/// Volume-filling initialization: uniform positions in `box`, isotropic scale
/// from the box diagonal and count, opacity 0.1, TI 0.5, identity rotations.
template <typename T>
GaussianCloud<T> init_cloud(const Box3<T>& box, size_t count, uint64_t seed) {
    if (box.empty()) throw std::invalid_argument("init_cloud: empty bounding box");
    GaussianCloud<T> cloud;
    cloud.resize(count);
    Rng rng(seed);
    T s0 = std::log(T(0.05) * box.diagonal() / std::cbrt(T(count > 0 ? count : 1)));
    for (size_t i = 0; i < count; ++i) {
        cloud.position[i] = {T(rng.uniform(box.min.x, box.max.x)),
                             T(rng.uniform(box.min.y, box.max.y)),
                             T(rng.uniform(box.min.z, box.max.z))};
        cloud.raw_scale[i] = {s0, s0, s0};
        cloud.rotation[i] = Quat<T>{};
        cloud.raw_opacity[i] = logit(T(0.1));
        cloud.color[i] = {T(rng.uniform(0.2, 0.8)), T(rng.uniform(0.2, 0.8)),
                          T(rng.uniform(0.2, 0.8))};
        cloud.raw_ti[i] = logit(T(0.5));
    }
    return cloud;
}

}  // namespace s4dgs
