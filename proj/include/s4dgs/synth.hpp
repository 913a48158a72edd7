#pragma once

// Synthetic dynamic scenes: a ground-truth Gaussian cloud on a rigid
// trajectory, rendered into sparse train/eval frame sets by our own
// rasterizer. Because the ground truth is itself a Gaussian cloud, zero rgb
// loss is attainable up to 8-bit quantization, which anchors the experiments.

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/apply.hpp"
#include "s4dgs/camera.hpp"
#include "s4dgs/cloud.hpp"
#include "s4dgs/dataset.hpp"
#include "s4dgs/rasterizer.hpp"
#include "s4dgs/rng.hpp"

namespace s4dgs {

enum class TexturePattern { checker, stripes, speckle };

template <typename T>
struct MotionSpec {
    T translation_amp = T(0.25);  // world units
    T rotation_amp = T(0.35);     // radians about `axis`
    Vec3<T> axis{0, 1, 0};
};

template <typename T>
struct OrbitSpec {
    T radius = T(3.2);
    T elevation = T(0.35);       // radians
    T azimuth_center = T(0);
    T azimuth_span = T(0.8);     // radians swept over t in [0, 1]
    T fov_deg = T(50);
    T eval_elevation_offset = T(0.12);  // eval views sit off the camera path
};

template <typename T>
struct SceneSpec {
    uint64_t seed = 1;
    int gaussian_count = 800;
    Box3<T> box{{-1, -1, -1}, {1, 1, 1}};
    TexturePattern pattern = TexturePattern::checker;
    T pattern_cell = T(0.4);
    MotionSpec<T> motion;
    OrbitSpec<T> orbit;
    int train_frames = 10;
    int eval_frames = 4;
    int width = 96, height = 96;
};

/// Rigid motion of the whole cloud: rotation about the box center plus a
/// smooth translation; identity at t = 0 (the canonical configuration).
template <typename T>
struct Trajectory {
    MotionSpec<T> motion;
    Vec3<T> center{0, 0, 0};

    T angle(T t) const { return motion.rotation_amp * std::sin(2 * T(kPi) * t); }

    Mat3<T> rotation(T t) const {
        Vec3<T> ax = motion.axis * (T(1) / norm(motion.axis));
        T a = angle(t), c = std::cos(a), s = std::sin(a), ic = T(1) - c;
        Mat3<T> r;
        r.m = {c + ax.x * ax.x * ic,        ax.x * ax.y * ic - ax.z * s, ax.x * ax.z * ic + ax.y * s,
               ax.y * ax.x * ic + ax.z * s, c + ax.y * ax.y * ic,        ax.y * ax.z * ic - ax.x * s,
               ax.z * ax.x * ic - ax.y * s, ax.z * ax.y * ic + ax.x * s, c + ax.z * ax.z * ic};
        return r;
    }

    Vec3<T> translation(T t) const {
        T w = 2 * T(kPi) * t;
        return {motion.translation_amp * std::sin(w), motion.translation_amp * T(0.3) * std::sin(2 * w),
                T(0)};
    }

    /// Ground-truth cloud at time t (positions moved, orientations rotated).
    GaussianCloud<T> at(const GaussianCloud<T>& canonical, T t) const {
        GaussianCloud<T> out = canonical;
        Mat3<T> r = rotation(t);
        Vec3<T> d = translation(t);
        // quaternion of r, for composing with per-gaussian rotations
        T a = angle(t) / 2;
        Vec3<T> ax = motion.axis * (T(1) / norm(motion.axis));
        Quat<T> qr{std::cos(a), ax.x * std::sin(a), ax.y * std::sin(a), ax.z * std::sin(a)};
        for (size_t i = 0; i < out.size(); ++i) {
            out.position[i] = r * (canonical.position[i] - center) + center + d;
            const Quat<T>& q = canonical.rotation[i];
            out.rotation[i] = {qr.w * q.w - qr.x * q.x - qr.y * q.y - qr.z * q.z,
                               qr.w * q.x + qr.x * q.w + qr.y * q.z - qr.z * q.y,
                               qr.w * q.y - qr.x * q.z + qr.y * q.w + qr.z * q.x,
                               qr.w * q.z + qr.x * q.y - qr.y * q.x + qr.z * q.w};
        }
        return out;
    }
};

namespace detail {

inline constexpr double kPalette[3][3] = {
    {0.93, 0.80, 0.18}, {0.10, 0.22, 0.85}, {0.12, 0.78, 0.35}};

// Rotation taking the +z axis to `dir` (unit), as a quaternion.
template <typename T>
Quat<T> z_to(const Vec3<T>& dir) {
    if (dir.z < T(-0.999999)) return {0, 1, 0, 0};  // flip
    Quat<T> q{T(1) + dir.z, -dir.y, dir.x, T(0)};
    return normalized(q);
}

}  // namespace detail

/// The ground-truth cloud is a bumpy star-convex surface: gaussians sit on a
/// sphere whose radius steps at angular pattern cells, and colors follow the
/// same cells. Texture edges therefore coincide with depth edges, the
/// structure monocular-depth regularization feeds on.
template <typename T>
std::pair<GaussianCloud<T>, Trajectory<T>> generate_scene(const SceneSpec<T>& spec) {
    if (spec.gaussian_count <= 0)
        throw std::invalid_argument("generate_scene: gaussian_count must be positive");
    if (spec.box.empty()) throw std::invalid_argument("generate_scene: empty bounding box");

    Rng rng(spec.seed);
    GaussianCloud<T> cloud;
    cloud.resize(size_t(spec.gaussian_count));
    Vec3<T> center = (spec.box.min + spec.box.max) * T(0.5);
    T r0 = T(0.4) * spec.box.diagonal() / std::sqrt(T(3));  // 0.8 * half extent
    T bump = T(0.13);
    // tangential splat size comparable to the surface sample spacing
    T spacing = std::sqrt(T(4) * T(kPi) * r0 * r0 / T(spec.gaussian_count));

    for (int i = 0; i < spec.gaussian_count; ++i) {
        T cos_th = T(rng.uniform(-1.0, 1.0));
        T phi = T(rng.uniform(0.0, 2.0 * kPi));
        T theta = std::acos(cos_th);
        Vec3<T> dir{std::sin(theta) * std::cos(phi), cos_th, std::sin(theta) * std::sin(phi)};

        int ca = int(std::floor(theta / spec.pattern_cell));
        int cb = int(std::floor(phi / spec.pattern_cell));
        int pick;
        T radial;
        switch (spec.pattern) {
            case TexturePattern::checker:
                pick = ((ca + cb) % 2 + 2) % 2;
                radial = pick == 0 ? bump : -bump;
                break;
            case TexturePattern::stripes:
                pick = (cb % 3 + 3) % 3;
                radial = T(pick - 1) * bump;
                break;
            default:
                pick = int(rng.index(3));
                radial = T(rng.uniform(-double(bump), double(bump)));
        }
        T r = r0 * (T(1) + radial);
        cloud.position[i] = center + dir * r;

        T st = spacing * T(rng.uniform(0.65, 1.15));
        cloud.raw_scale[i] = {std::log(st), std::log(st), std::log(st * T(0.35))};
        cloud.rotation[i] = detail::z_to(dir);  // thin axis along the normal
        cloud.raw_opacity[i] = logit(T(rng.uniform(0.75, 0.97)));
        auto jit = [&](double b) { return T(std::clamp(b + rng.uniform(-0.05, 0.05), 0.0, 1.0)); };
        cloud.color[i] = {jit(detail::kPalette[pick][0]), jit(detail::kPalette[pick][1]),
                          jit(detail::kPalette[pick][2])};
        cloud.raw_ti[i] = logit(T(rng.uniform(0.35, 0.65)));
    }

    Trajectory<T> traj;
    traj.motion = spec.motion;
    traj.center = center;
    return {std::move(cloud), traj};
}

/// Train/eval cameras for a monocular orbit: train frames at uniform
/// timestamps along the sweep, eval frames at held-out timestamps with an
/// elevation offset (novel viewpoint and novel time jointly).
template <typename T>
std::vector<std::pair<Camera<T>, std::string>> dataset_cameras(const SceneSpec<T>& spec,
                                                               const Vec3<T>& center) {
    std::vector<std::pair<Camera<T>, std::string>> cams;
    T fx = T(spec.width) / (2 * std::tan(spec.orbit.fov_deg * T(kPi) / T(360)));
    auto azimuth = [&](T t) {
        return spec.orbit.azimuth_center + spec.orbit.azimuth_span * (t - T(0.5));
    };
    for (int i = 0; i < spec.train_frames; ++i) {
        T t = spec.train_frames == 1 ? T(0) : T(i) / T(spec.train_frames - 1);
        cams.push_back({look_at_camera(center, spec.orbit.radius, azimuth(t),
                                       spec.orbit.elevation, fx, spec.width, spec.height, t),
                        "train"});
    }
    for (int j = 0; j < spec.eval_frames; ++j) {
        T t = (T(j) + T(0.5)) / T(spec.eval_frames);
        cams.push_back({look_at_camera(center, spec.orbit.radius, azimuth(t),
                                       spec.orbit.elevation + spec.orbit.eval_elevation_offset, fx,
                                       spec.width, spec.height, t),
                        "eval"});
    }
    return cams;
}

/// Renders every frame, writes PNG + depth PFM + manifest under out_dir.
template <typename T>
DatasetManifest render_dataset(const GaussianCloud<T>& cloud, const Trajectory<T>& traj,
                               const SceneSpec<T>& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "frames");

    Background<T> bg;
    bg.far_depth = spec.orbit.radius + spec.box.diagonal();
    RenderSettings<T> settings;

    DatasetManifest manifest;
    manifest.width = spec.width;
    manifest.height = spec.height;
    manifest.background = {double(bg.rgb.x), double(bg.rgb.y), double(bg.rgb.z)};
    manifest.far_depth = double(bg.far_depth);

    auto cams = dataset_cameras(spec, traj.center);
    int train_idx = 0, eval_idx = 0;
    for (const auto& [cam, split] : cams) {
        GaussianCloud<T> deformed = traj.at(cloud, cam.time);
        Raster<T> raster = render(deformed, cam, bg, settings);

        int idx = split == "train" ? train_idx++ : eval_idx++;
        char name[64];
        std::snprintf(name, sizeof(name), "frames/%s_%03d", split.c_str(), idx);
        FrameInfo info;
        info.image = std::string(name) + ".png";
        info.depth = std::string(name) + ".pfm";
        info.time = double(cam.time);
        info.split = split;
        info.fx = double(cam.fx);
        info.fy = double(cam.fy);
        info.cx = double(cam.cx);
        info.cy = double(cam.cy);
        info.width = cam.width;
        info.height = cam.height;
        for (int i = 0; i < 16; ++i) info.pose[i] = double(cam.world_to_camera[i]);

        io::save_png(raster.rgb, (fs::path(out_dir) / info.image).string());
        io::save_pfm(raster.depth, (fs::path(out_dir) / info.depth).string());
        manifest.frames.push_back(std::move(info));
    }
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

/// Stand-in for a monocular depth estimate: a per-frame positive affine
/// remap of the true depth, drawn deterministically from (seed, frame).
struct DepthProxyConfig {
    double a_lo = 0.5, a_hi = 2.0;  // scale range, a_lo > 0
    double b_lo = -0.5, b_hi = 0.5; // shift range
    uint64_t seed = 7;

    void validate() const {
        if (!(a_lo > 0) || a_hi < a_lo)
            throw std::invalid_argument("depth proxy: scale range must be positive");
        if (b_hi < b_lo) throw std::invalid_argument("depth proxy: bad shift range");
    }
};

template <typename T>
Image<T> depth_proxy(const Image<T>& gt_depth, int frame_index, const DepthProxyConfig& cfg) {
    cfg.validate();
    Rng rng(splitmix64(cfg.seed) ^ splitmix64(0x6a09e667f3bcc909ull + uint64_t(frame_index)));
    T a = T(rng.uniform(cfg.a_lo, cfg.a_hi));
    T b = T(rng.uniform(cfg.b_lo, cfg.b_hi));
    Image<T> out = gt_depth;
    for (auto& v : out.data) v = a * v + b;
    return out;
}

}  // namespace s4dgs
