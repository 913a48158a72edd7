#pragma once

// Deformation network: per-Gaussian offsets (dx, dr, ds) predicted by an MLP
// from positionally encoded canonical position (stop-gradient) and timestamp.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "s4dgs/cloud.hpp"
#include "s4dgs/core.hpp"
#include "s4dgs/rng.hpp"

namespace s4dgs {

/// NeRF-style encoding: for k = 0..L-1 and each component v_j, append
/// sin(2^k pi v_j), cos(2^k pi v_j). The raw input is not included. Octaves
/// come from the double-angle recurrence (one sin/cos evaluation per
/// component); the recurrence is algebraically exact.
template <typename T>
void positional_encoding(const T* v, int dim, int freqs, T* out) {
    for (int j = 0; j < dim; ++j) {
        T s = std::sin(T(kPi) * v[j]);
        T c = std::cos(T(kPi) * v[j]);
        for (int k = 0; k < freqs; ++k) {
            out[(k * dim + j) * 2] = s;
            out[(k * dim + j) * 2 + 1] = c;
            T s2 = 2 * s * c;
            c = c * c - s * s;
            s = s2;
        }
    }
}

inline int encoding_dim(int dim, int freqs) { return 2 * freqs * dim; }

template <typename T>
void positional_encoding_backward(const T* v, int dim, int freqs, const T* d_out, T* d_v) {
    for (int j = 0; j < dim; ++j) d_v[j] = T(0);
    int idx = 0;
    for (int k = 0; k < freqs; ++k) {
        T f = T(std::ldexp(kPi, k));
        for (int j = 0; j < dim; ++j) {
            T a = f * v[j];
            d_v[j] += d_out[idx++] * f * std::cos(a);
            d_v[j] -= d_out[idx++] * f * std::sin(a);
        }
    }
}

template <typename T>
struct Dense {
    int in = 0, out = 0;
    std::vector<T> w;  // row-major [out][in]
    std::vector<T> b;

    void resize(int in_, int out_) {
        in = in_;
        out = out_;
        w.assign(size_t(in) * out, T(0));
        b.assign(out, T(0));
    }
};

struct DeformationConfig {
    int hidden_layers = 4;
    int width = 64;
    int pos_freqs = 10;   // L for position encoding
    int time_freqs = 6;   // L for time encoding

    int input_dim() const { return encoding_dim(3, pos_freqs) + encoding_dim(1, time_freqs); }
    bool operator==(const DeformationConfig&) const = default;
};

/// MLP weights plus encoding configuration. Output heads are zero-initialized
/// so a fresh network is the identity deformation.
template <typename T>
struct DeformationParams {
    DeformationConfig cfg;
    std::vector<Dense<T>> hidden;
    Dense<T> head_dx, head_dr, head_ds;

    size_t parameter_count() const {
        size_t n = 0;
        for (const auto& l : hidden) n += l.w.size() + l.b.size();
        n += head_dx.w.size() + head_dx.b.size();
        n += head_dr.w.size() + head_dr.b.size();
        n += head_ds.w.size() + head_ds.b.size();
        return n;
    }

    // Visits every parameter tensor in a fixed order (also the wire order).
    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        for (auto& l : hidden) {
            fn(l.w);
            fn(l.b);
        }
        for (Dense<T>* h : {&head_dx, &head_dr, &head_ds}) {
            fn(h->w);
            fn(h->b);
        }
    }
    template <typename Fn>
    void for_each_tensor(Fn&& fn) const {
        const_cast<DeformationParams*>(this)->for_each_tensor(
            [&](std::vector<T>& t) { fn(const_cast<const std::vector<T>&>(t)); });
    }

    template <typename U>
    DeformationParams<U> cast() const {
        DeformationParams<U> out;
        out.cfg = cfg;
        out.hidden.resize(hidden.size());
        auto conv = [](const Dense<T>& a, Dense<U>& b) {
            b.resize(a.in, a.out);
            for (size_t i = 0; i < a.w.size(); ++i) b.w[i] = U(a.w[i]);
            for (size_t i = 0; i < a.b.size(); ++i) b.b[i] = U(a.b[i]);
        };
        for (size_t i = 0; i < hidden.size(); ++i) conv(hidden[i], out.hidden[i]);
        conv(head_dx, out.head_dx);
        conv(head_dr, out.head_dr);
        conv(head_ds, out.head_ds);
        return out;
    }
};

/// Hidden weights get a Kaiming-uniform draw; heads stay zero (identity
/// deformation at init).
template <typename T>
DeformationParams<T> init_deformation(const DeformationConfig& cfg, uint64_t seed) {
    DeformationParams<T> p;
    p.cfg = cfg;
    Rng rng(seed);
    p.hidden.resize(cfg.hidden_layers);
    int in = cfg.input_dim();
    for (int l = 0; l < cfg.hidden_layers; ++l) {
        p.hidden[l].resize(in, cfg.width);
        T bound = std::sqrt(T(6) / T(in));
        for (auto& w : p.hidden[l].w) w = T(rng.uniform(-bound, bound));
        in = cfg.width;
    }
    p.head_dx.resize(cfg.width, 3);
    p.head_dr.resize(cfg.width, 4);
    p.head_ds.resize(cfg.width, 3);
    return p;
}

template <typename T>
struct Deltas {
    std::vector<Vec3<T>> dx;
    std::vector<Quat<T>> dr;
    std::vector<Vec3<T>> ds;

    void resize(size_t n) {
        dx.assign(n, Vec3<T>{0, 0, 0});
        dr.assign(n, Quat<T>{0, 0, 0, 0});
        ds.assign(n, Vec3<T>{0, 0, 0});
    }
    size_t size() const { return dx.size(); }
};

// Pre-activations and their sigmoids per layer replay the backward pass
// without re-evaluating any transcendental.
template <typename T>
struct DeformRecord {
    size_t count = 0;
    std::vector<T> input;     // count x input_dim encodings
    std::vector<T> pre_act;   // count x (layers * width)
    std::vector<T> sig;       // sigmoid of pre_act, same layout
    std::vector<T> last_h;    // count x width, input to the heads
};

namespace detail {

// Lane-blocked dot product: fixed accumulation order, vectorizable without
// float reassociation.
template <typename T>
T lane_dot(const T* __restrict__ a, const T* __restrict__ b, int n) {
    constexpr int kLanes = 16;
    T acc[kLanes] = {};
    int i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int k = 0; k < kLanes; ++k) acc[k] += a[i + k] * b[i + k];
    T tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    for (int k = 1; k < kLanes; ++k) acc[0] += acc[k];
    return acc[0] + tail;
}

template <typename T>
void dense_forward(const Dense<T>& l, const T* __restrict__ in, T* __restrict__ out) {
    for (int o = 0; o < l.out; ++o)
        out[o] = l.b[o] + lane_dot(&l.w[size_t(o) * l.in], in, l.in);
}

template <typename T>
void dense_backward(const Dense<T>& l, const T* __restrict__ in, const T* __restrict__ d_out,
                    Dense<T>& grad, T* __restrict__ d_in) {
    for (int o = 0; o < l.out; ++o) {
        T g = d_out[o];
        grad.b[o] += g;
        T* __restrict__ gw = &grad.w[size_t(o) * l.in];
        for (int i = 0; i < l.in; ++i) gw[i] += g * in[i];
        if (d_in) {
            const T* __restrict__ w = &l.w[size_t(o) * l.in];
            for (int i = 0; i < l.in; ++i) d_in[i] += g * w[i];
        }
    }
}

}  // namespace detail

/// F_theta(gamma(sg(x)), gamma(t)) per Gaussian. The canonical positions are
/// read through a stop-gradient: deform_backward never produces a gradient
/// with respect to them.
template <typename T>
Deltas<T> deform(const DeformationParams<T>& params, const std::vector<Vec3<T>>& positions, T t,
                 DeformRecord<T>* record = nullptr) {
    params.for_each_tensor([](const std::vector<T>& t) {
        for (T w : t)
            if (!std::isfinite(w)) throw std::runtime_error("deform: non-finite MLP parameter");
    });

    const DeformationConfig& cfg = params.cfg;
    size_t n = positions.size();
    int in_dim = cfg.input_dim();
    int pos_dim = encoding_dim(3, cfg.pos_freqs);

    Deltas<T> out;
    out.resize(n);
    if (record) {
        record->count = n;
        record->input.resize(n * in_dim);
        record->pre_act.resize(n * size_t(cfg.hidden_layers) * cfg.width);
        record->sig.resize(record->pre_act.size());
        record->last_h.resize(n * cfg.width);
    }

    std::vector<T> time_enc(encoding_dim(1, cfg.time_freqs));
    positional_encoding(&t, 1, cfg.time_freqs, time_enc.data());

    std::vector<T> enc(in_dim), h(cfg.width), z(cfg.width);
    for (size_t g = 0; g < n; ++g) {
        T pos[3] = {positions[g].x, positions[g].y, positions[g].z};
        positional_encoding(pos, 3, cfg.pos_freqs, enc.data());
        std::copy(time_enc.begin(), time_enc.end(), enc.begin() + pos_dim);
        if (record) std::copy(enc.begin(), enc.end(), record->input.begin() + g * in_dim);

        const T* cur = enc.data();
        for (int l = 0; l < cfg.hidden_layers; ++l) {
            detail::dense_forward(params.hidden[l], cur, z.data());
            size_t base = (g * cfg.hidden_layers + l) * cfg.width;
            if (record) std::copy(z.begin(), z.end(), record->pre_act.begin() + base);
            for (int i = 0; i < cfg.width; ++i) {
                T s = sigmoid(z[i]);
                if (record) record->sig[base + i] = s;
                h[i] = z[i] * s;
            }
            cur = h.data();
        }
        if (record) std::copy(h.begin(), h.end(), record->last_h.begin() + g * cfg.width);

        T dx[3], dr[4], ds[3];
        detail::dense_forward(params.head_dx, cur, dx);
        detail::dense_forward(params.head_dr, cur, dr);
        detail::dense_forward(params.head_ds, cur, ds);
        out.dx[g] = {dx[0], dx[1], dx[2]};
        out.dr[g] = {dr[0], dr[1], dr[2], dr[3]};
        out.ds[g] = {ds[0], ds[1], ds[2]};
    }
    return out;
}

/// Gradients of the MLP parameters given adjoints of the per-Gaussian deltas.
template <typename T>
DeformationParams<T> deform_backward(const DeformationParams<T>& params,
                                     const DeformRecord<T>& record, const Deltas<T>& d_deltas) {
    const DeformationConfig& cfg = params.cfg;
    DeformationParams<T> grad;
    grad.cfg = cfg;
    grad.hidden.resize(cfg.hidden_layers);
    int in_dim = cfg.input_dim();
    {
        int in = in_dim;
        for (int l = 0; l < cfg.hidden_layers; ++l) {
            grad.hidden[l].resize(in, cfg.width);
            in = cfg.width;
        }
        grad.head_dx.resize(cfg.width, 3);
        grad.head_dr.resize(cfg.width, 4);
        grad.head_ds.resize(cfg.width, 3);
    }

    std::vector<T> d_h(cfg.width), d_z(cfg.width), h(cfg.width), d_prev(std::max(in_dim, cfg.width));
    for (size_t g = 0; g < record.count; ++g) {
        const T* last_h = &record.last_h[g * cfg.width];
        T ddx[3] = {d_deltas.dx[g].x, d_deltas.dx[g].y, d_deltas.dx[g].z};
        T ddr[4] = {d_deltas.dr[g].w, d_deltas.dr[g].x, d_deltas.dr[g].y, d_deltas.dr[g].z};
        T dds[3] = {d_deltas.ds[g].x, d_deltas.ds[g].y, d_deltas.ds[g].z};

        std::fill(d_h.begin(), d_h.end(), T(0));
        detail::dense_backward(params.head_dx, last_h, ddx, grad.head_dx, d_h.data());
        detail::dense_backward(params.head_dr, last_h, ddr, grad.head_dr, d_h.data());
        detail::dense_backward(params.head_ds, last_h, dds, grad.head_ds, d_h.data());

        for (int l = cfg.hidden_layers - 1; l >= 0; --l) {
            size_t base = (g * cfg.hidden_layers + l) * cfg.width;
            const T* z = &record.pre_act[base];
            const T* sg = &record.sig[base];
            // silu'(z) = s (1 + z (1 - s)) from the cached sigmoid
            for (int i = 0; i < cfg.width; ++i)
                d_z[i] = d_h[i] * sg[i] * (T(1) + z[i] * (T(1) - sg[i]));
            const T* layer_in;
            int prev_dim;
            if (l == 0) {
                layer_in = &record.input[g * in_dim];
                prev_dim = in_dim;
            } else {
                size_t pbase = (g * cfg.hidden_layers + l - 1) * cfg.width;
                for (int i = 0; i < cfg.width; ++i)
                    h[i] = record.pre_act[pbase + i] * record.sig[pbase + i];
                layer_in = h.data();
                prev_dim = cfg.width;
            }
            std::fill(d_prev.begin(), d_prev.begin() + prev_dim, T(0));
            // Stop-gradient: for l == 0 the input adjoint is dropped.
            detail::dense_backward(params.hidden[l], layer_in, d_z.data(), grad.hidden[l],
                                   l == 0 ? nullptr : d_prev.data());
            std::copy(d_prev.begin(), d_prev.begin() + cfg.width, d_h.begin());
        }
    }
    return grad;
}

}  // namespace s4dgs
