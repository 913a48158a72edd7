#pragma once

// Windowed SSIM with an exact backward pass. Conventions follow the splatting
// lineage: 11x11 Gaussian window (sigma 1.5), zero-padded same-size
// convolution, C1 = 0.01^2, C2 = 0.03^2 on [0,1] images, mean over all pixels
// and channels. For images smaller than the window, the window shrinks to the
// largest odd size that fits.

#include <cmath>
#include <vector>

#include "s4dgs/image.hpp"

namespace s4dgs {

namespace detail {

template <typename T>
std::vector<T> gaussian_window(int size, T sigma) {
    std::vector<T> w(size);
    T sum = 0;
    int half = size / 2;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-sq(T(i - half)) / (2 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

inline int ssim_window_size(int h, int w) {
    int m = std::min({11, h, w});
    return (m % 2 == 0) ? m - 1 : m;
}

// Separable zero-padded same-size convolution of one channel plane.
template <typename T>
void conv_same(const std::vector<T>& src, int h, int w, const std::vector<T>& win,
               std::vector<T>& tmp, std::vector<T>& dst) {
    int half = int(win.size()) / 2;
    tmp.assign(src.size(), T(0));
    dst.assign(src.size(), T(0));
    for (int i = 0; i < h; ++i) {  // horizontal pass
        const T* row = &src[size_t(i) * w];
        T* out = &tmp[size_t(i) * w];
        for (int j = 0; j < w; ++j) {
            T acc = 0;
            int k0 = std::max(-half, -j), k1 = std::min(half, w - 1 - j);
            for (int k = k0; k <= k1; ++k) acc += win[k + half] * row[j + k];
            out[j] = acc;
        }
    }
    for (int j = 0; j < w; ++j) {  // vertical pass
        for (int i = 0; i < h; ++i) {
            T acc = 0;
            int k0 = std::max(-half, -i), k1 = std::min(half, h - 1 - i);
            for (int k = k0; k <= k1; ++k) acc += win[k + half] * tmp[size_t(i + k) * w + j];
            dst[size_t(i) * w + j] = acc;
        }
    }
}

template <typename T>
struct SsimPlanes {
    std::vector<T> mu1, mu2, s11, s22, s12;
};

template <typename T>
void ssim_channel_stats(const std::vector<T>& x, const std::vector<T>& y, int h, int w,
                        const std::vector<T>& win, SsimPlanes<T>& p) {
    size_t n = size_t(h) * w;
    std::vector<T> tmp, prod(n);
    conv_same(x, h, w, win, tmp, p.mu1);
    conv_same(y, h, w, win, tmp, p.mu2);
    for (size_t i = 0; i < n; ++i) prod[i] = x[i] * x[i];
    conv_same(prod, h, w, win, tmp, p.s11);
    for (size_t i = 0; i < n; ++i) prod[i] = y[i] * y[i];
    conv_same(prod, h, w, win, tmp, p.s22);
    for (size_t i = 0; i < n; ++i) prod[i] = x[i] * y[i];
    conv_same(prod, h, w, win, tmp, p.s12);
    for (size_t i = 0; i < n; ++i) {
        p.s11[i] -= p.mu1[i] * p.mu1[i];
        p.s22[i] -= p.mu2[i] * p.mu2[i];
        p.s12[i] -= p.mu1[i] * p.mu2[i];
    }
}

template <typename T>
inline constexpr T kSsimC1 = T(0.01 * 0.01);
template <typename T>
inline constexpr T kSsimC2 = T(0.03 * 0.03);

}  // namespace detail

/// Mean SSIM of `x` against `y` over all pixels and channels.
template <typename T>
T ssim(const Image<T>& x, const Image<T>& y) {
    require_same_shape(x, y, "ssim");
    const int h = x.height, w = x.width, ch = x.channels;
    const int win_size = detail::ssim_window_size(h, w);
    auto win = detail::gaussian_window<T>(win_size, T(1.5));
    const T c1 = detail::kSsimC1<T>, c2 = detail::kSsimC2<T>;

    size_t n = size_t(h) * w;
    std::vector<T> xc(n), yc(n);
    detail::SsimPlanes<T> p;
    T total = 0;
    for (int c = 0; c < ch; ++c) {
        for (size_t i = 0; i < n; ++i) {
            xc[i] = x.data[i * ch + c];
            yc[i] = y.data[i * ch + c];
        }
        detail::ssim_channel_stats(xc, yc, h, w, win, p);
        for (size_t i = 0; i < n; ++i) {
            T num = (2 * p.mu1[i] * p.mu2[i] + c1) * (2 * p.s12[i] + c2);
            T den = (p.mu1[i] * p.mu1[i] + p.mu2[i] * p.mu2[i] + c1) * (p.s11[i] + p.s22[i] + c2);
            total += num / den;
        }
    }
    return total / T(n * ch);
}

/// d(mean SSIM)/dx scaled by `d_out`. `y` is treated as constant.
template <typename T>
Image<T> ssim_backward(const Image<T>& x, const Image<T>& y, T d_out) {
    require_same_shape(x, y, "ssim_backward");
    const int h = x.height, w = x.width, ch = x.channels;
    const int win_size = detail::ssim_window_size(h, w);
    auto win = detail::gaussian_window<T>(win_size, T(1.5));
    const T c1 = detail::kSsimC1<T>, c2 = detail::kSsimC2<T>;

    size_t n = size_t(h) * w;
    Image<T> grad(h, w, ch);
    std::vector<T> xc(n), yc(n), da(n), db(n), dc(n), tmp, conv;
    detail::SsimPlanes<T> p;
    T scale = d_out / T(n * ch);
    for (int c = 0; c < ch; ++c) {
        for (size_t i = 0; i < n; ++i) {
            xc[i] = x.data[i * ch + c];
            yc[i] = y.data[i * ch + c];
        }
        detail::ssim_channel_stats(xc, yc, h, w, win, p);
        for (size_t i = 0; i < n; ++i) {
            T mu1 = p.mu1[i], mu2 = p.mu2[i];
            T a1 = 2 * mu1 * mu2 + c1, a2 = 2 * p.s12[i] + c2;
            T b1 = mu1 * mu1 + mu2 * mu2 + c1, b2 = p.s11[i] + p.s22[i] + c2;
            T inv = T(1) / (b1 * b2);
            // partials of ssim(i) w.r.t. mu1, sigma11, sigma12
            T d_mu1 = (2 * mu2 * a2 - a1 * a2 * inv * 2 * mu1 * b2) * inv;
            T d_s11 = -a1 * a2 * inv * inv * b1;
            T d_s12 = 2 * a1 * inv;
            // fold the sigma terms' dependence on mu back in:
            // s11 = G*(x^2) - mu1^2, s12 = G*(x y) - mu1 mu2
            da[i] = d_mu1 - 2 * mu1 * d_s11 - mu2 * d_s12;  // goes through G * x
            db[i] = d_s11;                                  // goes through G * x^2
            dc[i] = d_s12;                                  // goes through G * (x y)
        }
        // Zero-padded symmetric convolution is self-adjoint.
        detail::conv_same(da, h, w, win, tmp, conv);
        for (size_t i = 0; i < n; ++i) grad.data[i * ch + c] = conv[i];
        detail::conv_same(db, h, w, win, tmp, conv);
        for (size_t i = 0; i < n; ++i) grad.data[i * ch + c] += conv[i] * 2 * xc[i];
        detail::conv_same(dc, h, w, win, tmp, conv);
        for (size_t i = 0; i < n; ++i) grad.data[i * ch + c] += conv[i] * yc[i];
        for (size_t i = 0; i < n; ++i) grad.data[i * ch + c] *= scale;
    }
    return grad;
}

}  // namespace s4dgs
