#pragma once

// Training objective: L = L_rgb + lambda1 L_tex + lambda2 L_tadr, with L_rgb
// the usual L1/SSIM mix, and the texture terms driven by Pearson correlation
// so positive affine remappings of either argument cost nothing.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "s4dgs/image.hpp"
#include "s4dgs/rasterizer.hpp"
#include "s4dgs/ssim.hpp"
#include "s4dgs/texture.hpp"

namespace s4dgs {

template <typename T>
struct LossConfig {
    T lambda_ssim = T(0.2);
    T lambda1 = T(0.01);      // L_tex weight
    T lambda2 = T(0.01);      // L_tadr weight
    T pcc_epsilon = T(1e-8);  // variance floor
    bool use_pcc = true;      // false: L1 in place of PCC (ablation)
};

template <typename T>
struct LossReport {
    T total{}, rgb{}, l1{}, ssim{}, tex{}, tadr{};  // ssim stores 1 - SSIM
};

/// Pearson correlation with population moments and an epsilon variance floor;
/// constant inputs regularize to 0 instead of erroring.
template <typename T>
T pcc(std::span<const T> x, std::span<const T> y, T epsilon) {
    if (x.size() != y.size())
        throw std::invalid_argument("pcc: length mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    if (x.size() < 2) throw std::invalid_argument("pcc: need at least 2 samples");
    const size_t n = x.size();
    T mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= T(n);
    my /= T(n);
    T cov = 0, vx = 0, vy = 0;
    for (size_t i = 0; i < n; ++i) {
        T dx = x[i] - mx, dy = y[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    cov /= T(n);
    vx /= T(n);
    vy /= T(n);
    return cov / (std::sqrt(vx + epsilon) * std::sqrt(vy + epsilon));
}

/// d pcc / d x (and symmetrically y) accumulated into the provided buffers.
template <typename T>
void pcc_backward(std::span<const T> x, std::span<const T> y, T epsilon, T d_out, T* d_x, T* d_y) {
    const size_t n = x.size();
    T mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= T(n);
    my /= T(n);
    T cov = 0, vx = 0, vy = 0;
    for (size_t i = 0; i < n; ++i) {
        T dx = x[i] - mx, dy = y[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    cov /= T(n);
    vx /= T(n);
    vy /= T(n);
    T sx = std::sqrt(vx + epsilon), sy = std::sqrt(vy + epsilon);
    T p = cov / (sx * sy);
    T inv_n = T(1) / T(n);
    for (size_t i = 0; i < n; ++i) {
        T cx = x[i] - mx, cy = y[i] - my;
        if (d_x) d_x[i] += d_out * inv_n * (cy / (sx * sy) - p * cx / (sx * sx));
        if (d_y) d_y[i] += d_out * inv_n * (cx / (sx * sy) - p * cy / (sy * sy));
    }
}

template <typename T>
T l1(const Image<T>& a, const Image<T>& b) {
    require_same_shape(a, b, "l1");
    T acc = 0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
    return acc / T(a.data.size());
}

/// L_rgb = (1 - lambda) L1 + lambda (1 - SSIM).
template <typename T>
T rgb_loss(const Image<T>& rendered, const Image<T>& gt, T lambda_ssim) {
    require_same_shape(rendered, gt, "rgb_loss");
    T l = l1(rendered, gt);
    if (lambda_ssim == T(0)) return l;
    return (T(1) - lambda_ssim) * l + lambda_ssim * (T(1) - ssim(rendered, gt));
}

template <typename T>
Image<T> rgb_loss_backward(const Image<T>& rendered, const Image<T>& gt, T lambda_ssim, T d_out) {
    Image<T> grad(rendered.height, rendered.width, rendered.channels);
    T w = d_out * (T(1) - lambda_ssim) / T(rendered.data.size());
    for (size_t i = 0; i < grad.data.size(); ++i) {
        T d = rendered.data[i] - gt.data[i];
        grad.data[i] = d > T(0) ? w : (d < T(0) ? -w : T(0));
    }
    if (lambda_ssim != T(0)) {
        Image<T> gs = ssim_backward(rendered, gt, -d_out * lambda_ssim);
        for (size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += gs.data[i];
    }
    return grad;
}

/// L_tex = 1 - PCC(TI_gt, TI_render), or mean |diff| in the L1 ablation.
template <typename T>
T tex_loss(const Image<T>& ti_render, const TextureMap<T>& ti_gt, const LossConfig<T>& cfg) {
    require_same_shape(ti_render, ti_gt.values, "tex_loss");
    if (!cfg.use_pcc) return l1(ti_render, ti_gt.values);
    return T(1) - pcc<T>(ti_gt.values.data, ti_render.data, cfg.pcc_epsilon);
}

template <typename T>
Image<T> tex_loss_backward(const Image<T>& ti_render, const TextureMap<T>& ti_gt,
                           const LossConfig<T>& cfg, T d_out) {
    Image<T> grad(ti_render.height, ti_render.width, 1);
    if (!cfg.use_pcc) {
        T w = d_out / T(ti_render.data.size());
        for (size_t i = 0; i < grad.data.size(); ++i) {
            T d = ti_render.data[i] - ti_gt.values.data[i];
            grad.data[i] = d > T(0) ? w : (d < T(0) ? -w : T(0));
        }
        return grad;
    }
    pcc_backward<T>(ti_gt.values.data, ti_render.data, cfg.pcc_epsilon, -d_out, nullptr,
                    grad.data.data());
    return grad;
}

/// L_tadr = 1 - PCC(TE(depth_proxy), TE(depth_render)).
template <typename T>
T tadr_loss(const Image<T>& depth_render, const Image<T>& depth_proxy, const LossConfig<T>& cfg) {
    require_same_shape(depth_render, depth_proxy, "tadr_loss");
    TextureMap<T> ti_render = ti_of_depth(depth_render);
    TextureMap<T> ti_proxy = ti_of_depth(depth_proxy);
    if (!cfg.use_pcc) return l1(ti_render.values, ti_proxy.values);
    return T(1) - pcc<T>(ti_proxy.values.data, ti_render.values.data, cfg.pcc_epsilon);
}

template <typename T>
Image<T> tadr_loss_backward(const Image<T>& depth_render, const Image<T>& depth_proxy,
                            const LossConfig<T>& cfg, T d_out) {
    SobelRecord<T> rec;
    TextureMap<T> ti_render = ti_of_depth(depth_render, &rec);
    TextureMap<T> ti_proxy = ti_of_depth(depth_proxy);
    Image<T> d_mag(depth_render.height, depth_render.width, 1);
    if (!cfg.use_pcc) {
        T w = d_out / T(d_mag.data.size());
        for (size_t i = 0; i < d_mag.data.size(); ++i) {
            T d = ti_render.values.data[i] - ti_proxy.values.data[i];
            d_mag.data[i] = d > T(0) ? w : (d < T(0) ? -w : T(0));
        }
    } else {
        pcc_backward<T>(ti_proxy.values.data, ti_render.values.data, cfg.pcc_epsilon, -d_out,
                        nullptr, d_mag.data.data());
    }
    return sobel_ti_backward(rec, d_mag);
}

/// Ground-truth bundle for one frame: the image, its Sobel TI map, and the
/// (affine-perturbed) depth proxy.
template <typename T>
struct GtFrame {
    Image<T> rgb;
    TextureMap<T> ti;
    Image<T> depth_proxy;
};

/// Full objective; fills the adjoint raster for render_backward.
template <typename T>
LossReport<T> total_loss(const Raster<T>& rendered, const GtFrame<T>& gt,
                         const LossConfig<T>& cfg, RasterAdjoint<T>* adjoint = nullptr) {
    LossReport<T> rep;
    rep.l1 = l1(rendered.rgb, gt.rgb);
    rep.ssim = cfg.lambda_ssim == T(0) ? T(0) : T(1) - ssim(rendered.rgb, gt.rgb);
    rep.rgb = (T(1) - cfg.lambda_ssim) * rep.l1 + cfg.lambda_ssim * rep.ssim;
    rep.tex = tex_loss(rendered.ti, gt.ti, cfg);
    rep.tadr = tadr_loss(rendered.depth, gt.depth_proxy, cfg);
    rep.total = rep.rgb + cfg.lambda1 * rep.tex + cfg.lambda2 * rep.tadr;

    if (adjoint) {
        *adjoint = Raster<T>(rendered.height(), rendered.width());
        adjoint->rgb = rgb_loss_backward(rendered.rgb, gt.rgb, cfg.lambda_ssim, T(1));
        adjoint->ti = tex_loss_backward(rendered.ti, gt.ti, cfg, cfg.lambda1);
        adjoint->depth = tadr_loss_backward(rendered.depth, gt.depth_proxy, cfg, cfg.lambda2);
        // alpha carries no loss term
    }
    return rep;
}

}  // namespace s4dgs
