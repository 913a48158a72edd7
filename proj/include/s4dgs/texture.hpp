#pragma once

// 2D texture intensity: Sobel gradient magnitude of an image, used both on
// ground-truth frames (L_tex target) and on rendered depth (TADR).

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s4dgs/image.hpp"

namespace s4dgs {

enum class TextureSource { rgb_derived, depth_derived };

template <typename T>
struct TextureMap {
    Image<T> values;  // H x W, gradient magnitude, >= 0
    TextureSource source = TextureSource::rgb_derived;
};

/// How a 3-channel image is reduced before the Sobel stencil. Luminance is
/// the default; the per-channel readings are kept selectable.
enum class RgbReduction { luminance, channel_mean, channel_max };

/// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
template <typename T>
Image<T> luminance(const Image<T>& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("luminance: expected 3-channel image");
    Image<T> out(rgb.height, rgb.width, 1);
    for (int i = 0; i < rgb.height; ++i)
        for (int j = 0; j < rgb.width; ++j)
            out.at(i, j) = T(0.299) * rgb.at(i, j, 0) + T(0.587) * rgb.at(i, j, 1) +
                           T(0.114) * rgb.at(i, j, 2);
    return out;
}

namespace detail {

// Sobel stencils, applied as written (no kernel flip).
inline constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline int clamp_index(int v, int n) { return std::clamp(v, 0, n - 1); }

// Floor on the magnitude used as backward denominator, so the adjoint stays
// finite at the sqrt kink (constant regions). The forward value is exact.
inline constexpr double kSobelGradFloor = 1e-12;

}  // namespace detail

template <typename T>
struct SobelRecord {
    Image<T> gx, gy, magnitude;
};

/// TI(i,j) = sqrt(gx^2 + gy^2 + eps) with replicate border padding.
template <typename T>
TextureMap<T> sobel_ti(const Image<T>& gray, SobelRecord<T>* record = nullptr,
                       TextureSource source = TextureSource::rgb_derived) {
    if (gray.channels != 1) throw std::invalid_argument("sobel_ti: expected 1-channel image");
    if (gray.height < 3 || gray.width < 3)
        throw std::invalid_argument("sobel_ti: image smaller than the 3x3 kernel (" +
                                    std::to_string(gray.height) + "x" +
                                    std::to_string(gray.width) + ")");
    const int h = gray.height, w = gray.width;
    Image<T> gx(h, w, 1), gy(h, w, 1), mag(h, w, 1);
    // The stencils factor into smoothed differences; accumulating
    // (right - left) keeps constant inputs at exactly zero.
    constexpr T smooth[3] = {1, 2, 1};
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            int jm = detail::clamp_index(j - 1, w), jp = detail::clamp_index(j + 1, w);
            int im = detail::clamp_index(i - 1, h), ip = detail::clamp_index(i + 1, h);
            T sx = 0, sy = 0;
            for (int k = 0; k < 3; ++k) {
                int ik = detail::clamp_index(i + k - 1, h);
                int jk = detail::clamp_index(j + k - 1, w);
                sx += smooth[k] * (gray.at(ik, jp) - gray.at(ik, jm));
                sy += smooth[k] * (gray.at(ip, jk) - gray.at(im, jk));
            }
            gx.at(i, j) = sx;
            gy.at(i, j) = sy;
            mag.at(i, j) = std::sqrt(sx * sx + sy * sy);
        }
    }
    if (record) {
        record->gx = gx;
        record->gy = gy;
        record->magnitude = mag;
    }
    TextureMap<T> out;
    out.values = std::move(mag);
    out.source = source;
    return out;
}

/// Adjoint of sobel_ti: scatters the magnitude adjoint back through the
/// stencil, accumulating clamped border taps onto the edge pixels.
template <typename T>
Image<T> sobel_ti_backward(const SobelRecord<T>& record, const Image<T>& d_mag) {
    const int h = d_mag.height, w = d_mag.width;
    Image<T> d_gray(h, w, 1);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            T m = std::max(record.magnitude.at(i, j), T(detail::kSobelGradFloor));
            T scale = d_mag.at(i, j) / m;
            T dgx = record.gx.at(i, j) * scale;
            T dgy = record.gy.at(i, j) * scale;
            for (int u = 0; u < 3; ++u) {
                int ii = detail::clamp_index(i + u - 1, h);
                for (int v = 0; v < 3; ++v) {
                    int jj = detail::clamp_index(j + v - 1, w);
                    d_gray.at(ii, jj) +=
                        T(detail::kSobelX[u][v]) * dgx + T(detail::kSobelY[u][v]) * dgy;
                }
            }
        }
    }
    return d_gray;
}

/// TI of a depth raster: the Sobel stencil applied to depth directly.
template <typename T>
TextureMap<T> ti_of_depth(const Image<T>& depth, SobelRecord<T>* record = nullptr) {
    return sobel_ti(depth, record, TextureSource::depth_derived);
}

/// TI of an RGB frame under the configured channel reduction.
template <typename T>
TextureMap<T> ti_of_rgb(const Image<T>& rgb, RgbReduction reduction = RgbReduction::luminance) {
    if (reduction == RgbReduction::luminance) return sobel_ti(luminance(rgb));
    // Per-channel Sobel magnitude, then mean or max across channels.
    Image<T> chan(rgb.height, rgb.width, 1);
    TextureMap<T> out;
    out.values = Image<T>(rgb.height, rgb.width, 1);
    for (int c = 0; c < rgb.channels; ++c) {
        for (int i = 0; i < rgb.height; ++i)
            for (int j = 0; j < rgb.width; ++j) chan.at(i, j) = rgb.at(i, j, c);
        TextureMap<T> t = sobel_ti(chan);
        for (size_t k = 0; k < t.values.data.size(); ++k) {
            if (reduction == RgbReduction::channel_mean)
                out.values.data[k] += t.values.data[k] / T(rgb.channels);
            else
                out.values.data[k] = std::max(out.values.data[k], t.values.data[k]);
        }
    }
    return out;
}

}  // namespace s4dgs
