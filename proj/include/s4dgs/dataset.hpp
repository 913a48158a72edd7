#pragma once

// Dataset manifest: one JSON object per dataset listing frames with
// intrinsics, a 16-float row-major world-to-camera pose, normalized
// timestamp, split flag and image/depth paths.

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "s4dgs/camera.hpp"
#include "s4dgs/image.hpp"
#include "s4dgs/io/pfm.hpp"
#include "s4dgs/io/png.hpp"

namespace s4dgs {

struct FrameInfo {
    std::string image;  // path relative to the dataset directory
    std::string depth;
    double time = 0;
    std::string split = "train";  // "train" or "eval"
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    std::array<double, 16> pose{};  // world_to_camera, row-major
};

struct DatasetManifest {
    int width = 0, height = 0;
    std::array<double, 3> background{0, 0, 0};
    double far_depth = 10;
    std::vector<FrameInfo> frames;
};

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["width"] = m.width;
    j["height"] = m.height;
    j["background"] = m.background;
    j["far_depth"] = m.far_depth;
    j["frames"] = nlohmann::json::array();
    for (const auto& f : m.frames) {
        nlohmann::json jf;
        jf["image"] = f.image;
        jf["depth"] = f.depth;
        jf["time"] = f.time;
        jf["split"] = f.split;
        jf["fx"] = f.fx;
        jf["fy"] = f.fy;
        jf["cx"] = f.cx;
        jf["cy"] = f.cy;
        jf["width"] = f.width;
        jf["height"] = f.height;
        jf["pose"] = f.pose;
        j["frames"].push_back(std::move(jf));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("manifest: cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest: malformed JSON in " + path + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.width = j.at("width");
        m.height = j.at("height");
        m.background = j.at("background");
        m.far_depth = j.at("far_depth");
        for (const auto& jf : j.at("frames")) {
            FrameInfo f;
            f.image = jf.at("image");
            f.depth = jf.at("depth");
            f.time = jf.at("time");
            f.split = jf.at("split");
            f.fx = jf.at("fx");
            f.fy = jf.at("fy");
            f.cx = jf.at("cx");
            f.cy = jf.at("cy");
            f.width = jf.at("width");
            f.height = jf.at("height");
            f.pose = jf.at("pose");
            m.frames.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest: missing or mistyped key in " + path + ": " + e.what());
    }
    return m;
}

template <typename T>
Camera<T> frame_camera(const FrameInfo& f) {
    Camera<T> cam;
    cam.fx = T(f.fx);
    cam.fy = T(f.fy);
    cam.cx = T(f.cx);
    cam.cy = T(f.cy);
    cam.width = f.width;
    cam.height = f.height;
    cam.time = T(f.time);
    for (int i = 0; i < 16; ++i) cam.world_to_camera[i] = T(f.pose[i]);
    cam.validate();
    return cam;
}

template <typename T>
struct LoadedFrame {
    Camera<T> camera;
    Image<T> rgb;    // H x W x 3 in [0, 1]
    Image<T> depth;  // H x W ground-truth depth
    std::string split;
};

template <typename T>
LoadedFrame<T> load_frame(const std::string& dataset_dir, const FrameInfo& info) {
    namespace fs = std::filesystem;
    LoadedFrame<T> out;
    out.camera = frame_camera<T>(info);
    out.rgb = io::load_png<T>((fs::path(dataset_dir) / info.image).string());
    out.depth = io::load_pfm<T>((fs::path(dataset_dir) / info.depth).string());
    out.split = info.split;
    if (out.rgb.height != info.height || out.rgb.width != info.width)
        throw std::runtime_error("dataset: image size does not match manifest for " + info.image);
    return out;
}

}  // namespace s4dgs
