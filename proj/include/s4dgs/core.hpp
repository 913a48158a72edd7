#pragma once

// Small fixed-size linear algebra and scalar helpers shared by every module.
// Everything is templated on the scalar type: float for training throughput,
// double for gradient-check fixtures.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace s4dgs {

inline constexpr double kPi = 3.14159265358979323846;

template <typename T>
struct Vec2 {
    T x{}, y{};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(T s) const { return {x * s, y * s}; }
};

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    T& operator[](int i) { return (&x)[i]; }
    const T& operator[](int i) const { return (&x)[i]; }
};

template <typename T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T>
T norm(const Vec3<T>& v) {
    return std::sqrt(dot(v, v));
}

// Quaternion stored (w, x, y, z); identity = (1, 0, 0, 0).
template <typename T>
struct Quat {
    T w{1}, x{0}, y{0}, z{0};

    Quat operator+(const Quat& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    Quat& operator+=(const Quat& o) {
        w += o.w;
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    T& operator[](int i) { return (&w)[i]; }
    const T& operator[](int i) const { return (&w)[i]; }
};

template <typename T>
T norm(const Quat<T>& q) {
    return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

template <typename T>
Quat<T> normalized(const Quat<T>& q) {
    T n = norm(q);
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Row-major 2x2.
template <typename T>
struct Mat2 {
    T m00{}, m01{}, m10{}, m11{};

    T det() const { return m00 * m11 - m01 * m10; }
    Mat2 inverse() const {
        T d = det();
        return {m11 / d, -m01 / d, -m10 / d, m00 / d};
    }
    Vec2<T> operator*(const Vec2<T>& v) const {
        return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y};
    }
};

// Row-major 3x3.
template <typename T>
struct Mat3 {
    std::array<T, 9> m{};  // m[r * 3 + c]

    static Mat3 identity() {
        Mat3 r;
        r.m = {T(1), 0, 0, 0, T(1), 0, 0, 0, T(1)};
        return r;
    }
    T& operator()(int r, int c) { return m[r * 3 + c]; }
    const T& operator()(int r, int c) const { return m[r * 3 + c]; }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Vec3<T> operator*(const Vec3<T>& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat3 operator*(T s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
        return r;
    }
};

// R(q) for unit q, the standard quaternion-to-rotation map.
template <typename T>
Mat3<T> rotation_matrix(const Quat<T>& q) {
    T w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3<T> r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return r;
}

// d(loss)/dq_hat from d(loss)/dR, the adjoint of rotation_matrix at unit q.
template <typename T>
Quat<T> rotation_matrix_backward(const Quat<T>& q, const Mat3<T>& dR) {
    T w = q.w, x = q.x, y = q.y, z = q.z;
    Quat<T> g{0, 0, 0, 0};
    // Entry-by-entry contraction of dR with dR/d(w,x,y,z).
    g.w += dR(0, 1) * (-2 * z) + dR(0, 2) * (2 * y);
    g.w += dR(1, 0) * (2 * z) + dR(1, 2) * (-2 * x);
    g.w += dR(2, 0) * (-2 * y) + dR(2, 1) * (2 * x);

    g.x += dR(0, 1) * (2 * y) + dR(0, 2) * (2 * z);
    g.x += dR(1, 0) * (2 * y) + dR(1, 1) * (-4 * x) + dR(1, 2) * (-2 * w);
    g.x += dR(2, 0) * (2 * z) + dR(2, 1) * (2 * w) + dR(2, 2) * (-4 * x);

    g.y += dR(0, 0) * (-4 * y) + dR(0, 1) * (2 * x) + dR(0, 2) * (2 * w);
    g.y += dR(1, 0) * (2 * x) + dR(1, 2) * (2 * z);
    g.y += dR(2, 0) * (-2 * w) + dR(2, 1) * (2 * z) + dR(2, 2) * (-4 * y);

    g.z += dR(0, 0) * (-4 * z) + dR(0, 1) * (-2 * w) + dR(0, 2) * (2 * x);
    g.z += dR(1, 0) * (2 * w) + dR(1, 1) * (-4 * z) + dR(1, 2) * (2 * y);
    g.z += dR(2, 0) * (2 * x) + dR(2, 1) * (2 * y);
    return g;
}

// Adjoint of q_hat = q / |q|: dq = (I - q_hat q_hat^T) / |q| * dq_hat.
template <typename T>
Quat<T> normalize_backward(const Quat<T>& q_raw, const Quat<T>& d_unit) {
    T n = norm(q_raw);
    Quat<T> u = normalized(q_raw);
    T proj = u.w * d_unit.w + u.x * d_unit.x + u.y * d_unit.y + u.z * d_unit.z;
    return {(d_unit.w - proj * u.w) / n, (d_unit.x - proj * u.x) / n,
            (d_unit.y - proj * u.y) / n, (d_unit.z - proj * u.z) / n};
}

template <typename T>
struct Box3 {
    Vec3<T> min{-1, -1, -1};
    Vec3<T> max{1, 1, 1};

    Vec3<T> extent() const { return max - min; }
    T diagonal() const { return norm(extent()); }
    bool empty() const { return !(min.x < max.x && min.y < max.y && min.z < max.z); }
};

// Numerically stable logistic sigmoid.
template <typename T>
T sigmoid(T v) {
    if (v >= 0) {
        T e = std::exp(-v);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(v);
    return e / (T(1) + e);
}

template <typename T>
T logit(T p) {
    return std::log(p / (T(1) - p));
}

template <typename T>
T sq(T v) {
    return v * v;
}

inline std::string cat(const char* a, size_t idx) {
    return std::string(a) + std::to_string(idx);
}

}  // namespace s4dgs
