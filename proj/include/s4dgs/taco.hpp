#pragma once

// Texture-Aware Canonical Optimization: a moment-based gradient step for all
// parameter groups plus opacity- and TI-gated Langevin noise on positions,
// with periodic opacity pruning. c_noise = 0 degenerates to the plain
// optimizer bit for bit.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/cloud.hpp"
#include "s4dgs/core.hpp"
#include "s4dgs/deformation.hpp"
#include "s4dgs/rng.hpp"

namespace s4dgs {

template <typename T>
struct NoiseConfig {
    T k = T(100);        // gate sharpness
    T t = T(0.995);      // gate threshold
    T c_noise = T(20);   // noise scale relative to the position learning rate
    bool independent_draws = true;  // separate eta for the opacity and TI terms
    bool anisotropic = true;        // transform eta by the gaussian's own sqrt(Sigma)
};

/// sigma(-k (v - t)): ~1 for small v, 0.5 at v = t, ~0 as v -> 1.
template <typename T>
T noise_gate(T v, T k, T t) {
    return sigmoid(-k * (v - t));
}

enum class OptimizerKind { adam, sgd };

template <typename T>
struct LrSchedule {
    T start = T(1e-3);
    T end = T(1e-5);
    int64_t steps = 5000;

    T at(int64_t iter) const {
        if (steps <= 0 || start == end) return start;
        double f = std::min(1.0, double(iter) / double(steps));
        return T(double(start) * std::pow(double(end) / double(start), f));
    }
};

template <typename T>
struct GroupLearningRates {
    LrSchedule<T> position;  // exponential decay
    T scale = T(5e-3);
    T rotation = T(1e-3);
    T opacity = T(5e-2);
    T color = T(5e-3);
    T ti = T(5e-2);
    T mlp = T(1e-3);
};

namespace detail {

template <typename T>
struct Moments {
    std::vector<T> m, v;
    void ensure(size_t n) {
        if (m.size() != n) {
            m.assign(n, T(0));
            v.assign(n, T(0));
        }
    }
};

}  // namespace detail

/// Optimizer moments, schedules and the noise stream. Owns all mutable
/// training-step state so runs are reproducible from (seed, config).
template <typename T>
struct TrainState {
    OptimizerKind kind = OptimizerKind::adam;
    T beta1 = T(0.9), beta2 = T(0.999), adam_eps = T(1e-15);
    GroupLearningRates<T> lr;
    int64_t iteration = 0;
    Rng noise_rng{0};

    detail::Moments<T> position, scale, rotation, opacity, color, ti, mlp;

    explicit TrainState(uint64_t seed = 0) : noise_rng(splitmix64(seed) ^ 0x9d5f1c6b2a3e4708ull) {}

    /// Drop per-gaussian moment rows not in `survivors` (ascending indices).
    void compact(const std::vector<uint32_t>& survivors) {
        auto take = [&](detail::Moments<T>& mo, size_t stride) {
            if (mo.m.empty()) return;
            std::vector<T> nm, nv;
            nm.reserve(survivors.size() * stride);
            nv.reserve(survivors.size() * stride);
            for (uint32_t idx : survivors)
                for (size_t c = 0; c < stride; ++c) {
                    nm.push_back(mo.m[idx * stride + c]);
                    nv.push_back(mo.v[idx * stride + c]);
                }
            mo.m = std::move(nm);
            mo.v = std::move(nv);
        };
        take(position, 3);
        take(scale, 3);
        take(rotation, 4);
        take(opacity, 1);
        take(color, 3);
        take(ti, 1);
    }
};

namespace detail {

template <typename T>
void step_span(OptimizerKind kind, T* m, T* v, T* params, const T* grads, size_t n, T lr, T beta1,
               T beta2, T eps, int64_t t, const char* group) {
    T bc1 = T(1) - std::pow(beta1, T(t));
    T bc2 = T(1) - std::pow(beta2, T(t));
    for (size_t i = 0; i < n; ++i) {
        T g = grads[i];
        if (!std::isfinite(g))
            throw std::runtime_error(std::string("taco_step: non-finite gradient in group ") +
                                     group);
        T upd;
        if (kind == OptimizerKind::adam) {
            m[i] = beta1 * m[i] + (T(1) - beta1) * g;
            v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
            upd = lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        } else {
            upd = lr * g;
        }
        if (!std::isfinite(upd))
            throw std::runtime_error(std::string("taco_step: non-finite update in group ") + group);
        params[i] -= upd;
    }
}

}  // namespace detail

/// One training update: moment-based step on every parameter group, then the
/// TACO position noise alpha_noise * (gate(o) S eta1 + gate(TI) S eta2) with
/// S = sqrt(Sigma) of each gaussian and alpha_noise = c_noise * position lr.
template <typename T>
void taco_step(GaussianCloud<T>& cloud, const CloudGrads<T>& grads, DeformationParams<T>* params,
               const DeformationParams<T>* param_grads, TrainState<T>& state,
               const NoiseConfig<T>& noise) {
    const size_t n = cloud.size();
    if (grads.position.size() != n || grads.raw_scale.size() != n || grads.rotation.size() != n ||
        grads.raw_opacity.size() != n || grads.color.size() != n || grads.raw_ti.size() != n)
        throw std::invalid_argument("taco_step: gradient arrays disagree with the cloud");

    // Gates and the noise transform read the pre-step parameters.
    std::vector<Vec3<T>> injected;
    T lr_pos = state.lr.position.at(state.iteration);
    if (noise.c_noise > T(0) && n > 0) {
        injected.resize(n);
        T alpha_noise = noise.c_noise * lr_pos;
        for (size_t i = 0; i < n; ++i) {
            T gate_o = noise_gate(sigmoid(cloud.raw_opacity[i]), noise.k, noise.t);
            T gate_ti = noise_gate(sigmoid(cloud.raw_ti[i]), noise.k, noise.t);
            Vec3<T> eta1{T(state.noise_rng.normal()), T(state.noise_rng.normal()),
                         T(state.noise_rng.normal())};
            Vec3<T> eta2 = eta1;
            if (noise.independent_draws)
                eta2 = {T(state.noise_rng.normal()), T(state.noise_rng.normal()),
                        T(state.noise_rng.normal())};
            Vec3<T> n1 = eta1, n2 = eta2;
            if (noise.anisotropic) {
                // sqrt(Sigma) = R diag(s): noise respects the anisotropy.
                Mat3<T> rot = rotation_matrix(normalized(cloud.rotation[i]));
                Vec3<T> s{std::exp(cloud.raw_scale[i].x), std::exp(cloud.raw_scale[i].y),
                          std::exp(cloud.raw_scale[i].z)};
                n1 = rot * Vec3<T>{eta1.x * s.x, eta1.y * s.y, eta1.z * s.z};
                n2 = rot * Vec3<T>{eta2.x * s.x, eta2.y * s.y, eta2.z * s.z};
            }
            injected[i] = (n1 * gate_o + n2 * gate_ti) * alpha_noise;
        }
    }

    int64_t t = state.iteration + 1;  // bias-correction step count
    auto step = [&](detail::Moments<T>& mo, auto& vec, const auto& gvec, T lr, int stride,
                    const char* name) {
        if (n == 0) return;
        static_assert(sizeof(vec[0]) % sizeof(T) == 0);
        mo.ensure(n * stride);
        detail::step_span(state.kind, mo.m.data(), mo.v.data(), reinterpret_cast<T*>(vec.data()),
                          reinterpret_cast<const T*>(gvec.data()), n * stride, lr, state.beta1,
                          state.beta2, state.adam_eps, t, name);
    };
    step(state.position, cloud.position, grads.position, lr_pos, 3, "position");
    step(state.scale, cloud.raw_scale, grads.raw_scale, state.lr.scale, 3, "raw_scale");
    step(state.rotation, cloud.rotation, grads.rotation, state.lr.rotation, 4, "rotation");
    step(state.opacity, cloud.raw_opacity, grads.raw_opacity, state.lr.opacity, 1, "raw_opacity");
    step(state.color, cloud.color, grads.color, state.lr.color, 3, "color");
    step(state.ti, cloud.raw_ti, grads.raw_ti, state.lr.ti, 1, "raw_ti");

    if (params && param_grads) {
        state.mlp.ensure(params->parameter_count());
        size_t off = 0;
        std::vector<const std::vector<T>*> gtensors;
        param_grads->for_each_tensor([&](const std::vector<T>& g) { gtensors.push_back(&g); });
        size_t gi = 0;
        params->for_each_tensor([&](std::vector<T>& p) {
            const std::vector<T>& g = *gtensors[gi++];
            detail::step_span(state.kind, state.mlp.m.data() + off, state.mlp.v.data() + off,
                              p.data(), g.data(), p.size(), state.lr.mlp, state.beta1, state.beta2,
                              state.adam_eps, t, "mlp");
            off += p.size();
        });
    }

    if (!injected.empty())
        for (size_t i = 0; i < n; ++i) cloud.position[i] += injected[i];

    // Keep colors renderable; a projection step, not part of the gradient.
    for (auto& c : cloud.color) {
        c.x = std::clamp(c.x, T(0), T(1));
        c.y = std::clamp(c.y, T(0), T(1));
        c.z = std::clamp(c.z, T(0), T(1));
    }

    state.iteration += 1;
}

/// Indices of gaussians whose activated opacity is at least `threshold`.
template <typename T>
std::vector<uint32_t> opacity_survivors(const GaussianCloud<T>& cloud, T threshold) {
    std::vector<uint32_t> keep;
    keep.reserve(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i)
        if (sigmoid(cloud.raw_opacity[i]) >= threshold) keep.push_back(uint32_t(i));
    return keep;
}

template <typename T>
GaussianCloud<T> select(const GaussianCloud<T>& cloud, const std::vector<uint32_t>& indices) {
    GaussianCloud<T> out;
    out.resize(indices.size());
    for (size_t k = 0; k < indices.size(); ++k) {
        uint32_t i = indices[k];
        out.position[k] = cloud.position[i];
        out.raw_scale[k] = cloud.raw_scale[i];
        out.rotation[k] = cloud.rotation[i];
        out.raw_opacity[k] = cloud.raw_opacity[i];
        out.color[k] = cloud.color[i];
        out.raw_ti[k] = cloud.raw_ti[i];
    }
    return out;
}

/// Remove gaussians with activated opacity below the threshold.
template <typename T>
GaussianCloud<T> prune(const GaussianCloud<T>& cloud, T threshold) {
    if (!(threshold > T(0) && threshold < T(1)))
        throw std::invalid_argument("prune: threshold must lie in (0, 1)");
    return select(cloud, opacity_survivors(cloud, threshold));
}

}  // namespace s4dgs
