#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "s4dgs/core.hpp"

namespace s4dgs {

/// Pinhole camera with a rigid world-to-camera pose and a normalized
/// timestamp. The pose is stored as the full 4x4 row-major transform so it
/// round-trips manifests exactly.
template <typename T>
struct Camera {
    T fx{}, fy{}, cx{}, cy{};
    int width = 0, height = 0;
    std::array<T, 16> world_to_camera{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    T time = 0;  // normalized timestamp in [0, 1]

    Mat3<T> rotation() const {
        Mat3<T> r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = world_to_camera[i * 4 + j];
        return r;
    }
    Vec3<T> translation() const {
        return {world_to_camera[3], world_to_camera[7], world_to_camera[11]};
    }
    Vec3<T> to_camera(const Vec3<T>& p) const { return rotation() * p + translation(); }

    void validate() const {
        if (width < 8 || height < 8)
            throw std::invalid_argument("camera: image size must be at least 8x8, got " +
                                        std::to_string(width) + "x" + std::to_string(height));
        Mat3<T> r = rotation();
        Mat3<T> rrt = r * r.transposed();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T want = (i == j) ? T(1) : T(0);
                if (std::abs(rrt(i, j) - want) > T(1e-6))
                    throw std::invalid_argument(
                        "camera: rotation block of world_to_camera is not orthonormal");
            }
        if (time < T(0) || time > T(1))
            throw std::invalid_argument("camera: timestamp must lie in [0, 1]");
    }
};

/// Camera placed on an orbit around `center`, looking at it. Azimuth and
/// elevation in radians; the camera's +z axis points at the target.
template <typename T>
Camera<T> look_at_camera(const Vec3<T>& center, T radius, T azimuth, T elevation, T fx, int width,
                         int height, T time) {
    Vec3<T> pos{center.x + radius * std::cos(elevation) * std::sin(azimuth),
                center.y + radius * std::sin(elevation),
                center.z + radius * std::cos(elevation) * std::cos(azimuth)};
    Vec3<T> fwd = center - pos;
    fwd = fwd * (T(1) / norm(fwd));
    Vec3<T> up{0, 1, 0};
    // right = fwd x up (camera x to the left-handedness convention of +z forward)
    Vec3<T> right{fwd.y * up.z - fwd.z * up.y, fwd.z * up.x - fwd.x * up.z,
                  fwd.x * up.y - fwd.y * up.x};
    right = right * (T(1) / norm(right));
    Vec3<T> down{fwd.y * right.z - fwd.z * right.y, fwd.z * right.x - fwd.x * right.z,
                 fwd.x * right.y - fwd.y * right.x};

    Camera<T> cam;
    cam.fx = fx;
    cam.fy = fx;
    cam.cx = T(width) / T(2);
    cam.cy = T(height) / T(2);
    cam.width = width;
    cam.height = height;
    cam.time = time;
    // Rows of R are the camera axes expressed in world coordinates.
    Vec3<T> axes[3] = {right, down, fwd};
    for (int i = 0; i < 3; ++i) {
        cam.world_to_camera[i * 4 + 0] = axes[i].x;
        cam.world_to_camera[i * 4 + 1] = axes[i].y;
        cam.world_to_camera[i * 4 + 2] = axes[i].z;
        cam.world_to_camera[i * 4 + 3] = -dot(axes[i], pos);
    }
    cam.world_to_camera[12] = cam.world_to_camera[13] = cam.world_to_camera[14] = T(0);
    cam.world_to_camera[15] = T(1);
    return cam;
}

}  // namespace s4dgs
