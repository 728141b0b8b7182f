// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace primvol {

struct Vec3 {
    double x{0.0}, y{0.0}, z{0.0};

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    static constexpr Vec3 splat(double v) { return {v, v, v}; }

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Componentwise product.
constexpr Vec3 mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
/// Componentwise quotient.
constexpr Vec3 div(const Vec3& a, const Vec3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / norm(v); }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }
inline double max_abs(const Vec3& v) { return std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)}); }

struct Vec2 {
    double u{0.0}, v{0.0};
};

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity();
    static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2);

    Vec3 column(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
    Vec3 operator*(const Vec3& v) const;
    Mat3 operator*(const Mat3& o) const;
    Mat3 transpose() const;
    double determinant() const;
};

/// Cross-product matrix: skew(a) * b == cross(a, b).
Mat3 skew(const Vec3& a);

/// Largest magnitude accepted by the exponential map; longer vectors are shortened.
inline constexpr double kMaxRotationAngle = std::numbers::pi - 1e-9;

/// Rotation in SO(3) stored as a unit quaternion (w, x, y, z).
class Rotation {
public:
    Rotation() = default;

    /// Normalizes the given quaternion. A zero quaternion yields the identity.
    static Rotation from_quaternion(double w, double x, double y, double z);
    /// Keeps the components bit-for-bit when already unit within 1e-12 (deserialization).
    static Rotation from_stored(double w, double x, double y, double z);
    /// Exponential map of an axis-angle vector whose length is the angle in radians.
    static Rotation from_axis_angle(const Vec3& v);
    /// Nearest rotation to an orthonormal matrix (Shepperd's method).
    static Rotation from_matrix(const Mat3& r);

    double w() const { return q_[0]; }
    double x() const { return q_[1]; }
    double y() const { return q_[2]; }
    double z() const { return q_[3]; }

    /// Logarithm map; the result has length in [0, pi].
    Vec3 log() const;
    Vec3 rotate(const Vec3& v) const;
    Vec3 inverse_rotate(const Vec3& v) const;
    Rotation inverse() const { return from_raw(q_[0], -q_[1], -q_[2], -q_[3]); }
    Mat3 matrix() const;

    /// Composition a * b applies b first, then a. Renormalized.
    Rotation operator*(const Rotation& b) const;

    /// True when both represent the same rotation (q and -q are equal).
    bool approx_equal(const Rotation& o, double tol = 1e-6) const;

    /// Intrinsic Z-Y-X Euler angles (yaw, pitch, roll), radians.
    Vec3 euler_zyx() const;

    /// Exact component equality (use approx_equal for rotation equivalence).
    bool operator==(const Rotation&) const = default;

private:
    static Rotation from_raw(double w, double x, double y, double z)
    {
        Rotation r;
        r.q_ = {w, x, y, z};
        return r;
    }
    std::array<double, 4> q_{1.0, 0.0, 0.0, 0.0};
};

inline Rotation compose(const Rotation& a, const Rotation& b) { return a * b; }

/// Right Jacobian of the SO(3) exponential: exp(v + e) ~= exp(v) * exp(J_r(v) e).
Mat3 so3_right_jacobian(const Vec3& v);

/// Rigid transform mapping local coordinates to world: x_world = R x + t.
struct RigidTransform {
    Rotation rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
    Vec3 apply_inverse(const Vec3& p) const { return rotation.inverse_rotate(p - translation); }
};

}  // namespace primvol
