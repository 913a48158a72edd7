#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/apply.hpp"
#include "s4dgs/dataset.hpp"
#include "s4dgs/deformation.hpp"
#include "s4dgs/image.hpp"
#include "s4dgs/ssim.hpp"

namespace s4dgs {

/// 10 log10(1 / MSE) on [0,1] images, capped at 100 dB for MSE < 1e-10.
template <typename T>
double psnr(const Image<T>& a, const Image<T>& b) {
    require_same_shape(a, b, "psnr");
    double mse = 0;
    for (size_t i = 0; i < a.data.size(); ++i) mse += sq(double(a.data[i]) - double(b.data[i]));
    mse /= double(a.data.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

struct EvalRow {
    int frame = 0;
    double time = 0;
    double psnr_db = 0;
    double ssim_val = 0;
};

struct EvalTable {
    std::vector<EvalRow> rows;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

/// Renders every frame of `split` at its (camera, t) through the deformation
/// network and tabulates PSNR/SSIM against the stored images.
template <typename T>
EvalTable evaluate(const GaussianCloud<T>& cloud, const DeformationParams<T>& params,
                   const std::string& dataset_dir, const DatasetManifest& manifest,
                   const std::string& split) {
    Background<T> bg;
    bg.rgb = {T(manifest.background[0]), T(manifest.background[1]), T(manifest.background[2])};
    bg.far_depth = T(manifest.far_depth);
    RenderSettings<T> settings;

    EvalTable table;
    int idx = -1;
    for (const auto& info : manifest.frames) {
        ++idx;
        if (info.split != split) continue;
        LoadedFrame<T> frame = load_frame<T>(dataset_dir, info);
        Deltas<T> deltas = deform(params, cloud.position, frame.camera.time);
        Raster<T> raster = render(apply(cloud, &deltas), frame.camera, bg, settings);
        EvalRow row;
        row.frame = idx;
        row.time = info.time;
        row.psnr_db = psnr(raster.rgb, frame.rgb);
        row.ssim_val = double(ssim(raster.rgb, frame.rgb));
        table.rows.push_back(row);
    }
    if (table.rows.empty())
        throw std::runtime_error("evaluate: empty split '" + split + "' in dataset");
    for (const auto& r : table.rows) {
        table.mean_psnr += r.psnr_db;
        table.mean_ssim += r.ssim_val;
    }
    table.mean_psnr /= double(table.rows.size());
    table.mean_ssim /= double(table.rows.size());
    return table;
}

}  // namespace s4dgs
