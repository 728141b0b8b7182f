// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/geom.h"

#include <algorithm>

namespace primvol {

Mat3 Mat3::identity()
{
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
    return r;
}

Mat3 Mat3::from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2)
{
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        r.m[i][0] = c0[i];
        r.m[i][1] = c1[i];
        r.m[i][2] = c2[i];
    }
    return r;
}

Vec3 Mat3::operator*(const Vec3& v) const
{
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 Mat3::operator*(const Mat3& o) const
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
}

Mat3 Mat3::transpose() const
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
}

double Mat3::determinant() const
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Mat3 skew(const Vec3& a)
{
    Mat3 r;
    r.m[0] = {0.0, -a.z, a.y};
    r.m[1] = {a.z, 0.0, -a.x};
    r.m[2] = {-a.y, a.x, 0.0};
    return r;
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z)
{
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) return Rotation{};
    return from_raw(w / n, x / n, y / n, z / n);
}

Rotation Rotation::from_stored(double w, double x, double y, double z)
{
    const double n2 = w * w + x * x + y * y + z * z;
    if (std::abs(n2 - 1.0) < 1e-12) return from_raw(w, x, y, z);
    return from_quaternion(w, x, y, z);
}

Rotation Rotation::from_axis_angle(const Vec3& v_in)
{
    Vec3 v = v_in;
    double theta = norm(v);
    if (theta > kMaxRotationAngle) {
        v = v * (kMaxRotationAngle / theta);
        theta = kMaxRotationAngle;
    }
    const double half = 0.5 * theta;
    // sin(theta/2)/theta, with a series near zero.
    const double k = theta < 1e-4 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
    return from_quaternion(std::cos(half), k * v.x, k * v.y, k * v.z);
}

Rotation Rotation::from_matrix(const Mat3& r)
{
    const auto& m = r.m;
    const double trace = m[0][0] + m[1][1] + m[2][2];
    if (trace > 0.0) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        return from_quaternion(0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s,
                               (m[1][0] - m[0][1]) / s);
    }
    if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
        const double s = 2.0 * std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]);
        return from_quaternion((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s,
                               (m[0][2] + m[2][0]) / s);
    }
    if (m[1][1] > m[2][2]) {
        const double s = 2.0 * std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]);
        return from_quaternion((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s,
                               (m[1][2] + m[2][1]) / s);
    }
    const double s = 2.0 * std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]);
    return from_quaternion((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s,
                           (m[1][2] + m[2][1]) / s, 0.25 * s);
}

Vec3 Rotation::log() const
{
    double w = q_[0];
    Vec3 v{q_[1], q_[2], q_[3]};
    if (w < 0.0) {
        w = -w;
        v = -v;
    }
    const double s = norm(v);
    if (s < 1e-8) {
        // theta ~= 2 s / w; first-order series.
        return v * (2.0 / w);
    }
    const double theta = 2.0 * std::atan2(s, w);
    return v * (theta / s);
}

Vec3 Rotation::rotate(const Vec3& v) const
{
    // v' = v + 2 w (u x v) + 2 u x (u x v)
    const Vec3 u{q_[1], q_[2], q_[3]};
    const Vec3 t = cross(u, v) * 2.0;
    return v + t * q_[0] + cross(u, t);
}

Vec3 Rotation::inverse_rotate(const Vec3& v) const
{
    const Vec3 u{-q_[1], -q_[2], -q_[3]};
    const Vec3 t = cross(u, v) * 2.0;
    return v + t * q_[0] + cross(u, t);
}

Mat3 Rotation::matrix() const
{
    const double w = q_[0], x = q_[1], y = q_[2], z = q_[3];
    Mat3 r;
    r.m[0] = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)};
    r.m[1] = {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)};
    r.m[2] = {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
    return r;
}

Rotation Rotation::operator*(const Rotation& b) const
{
    const auto& a = q_;
    const auto& c = b.q_;
    return from_quaternion(a[0] * c[0] - a[1] * c[1] - a[2] * c[2] - a[3] * c[3],
                           a[0] * c[1] + a[1] * c[0] + a[2] * c[3] - a[3] * c[2],
                           a[0] * c[2] - a[1] * c[3] + a[2] * c[0] + a[3] * c[1],
                           a[0] * c[3] + a[1] * c[2] - a[2] * c[1] + a[3] * c[0]);
}

bool Rotation::approx_equal(const Rotation& o, double tol) const
{
    double same = 0.0, flipped = 0.0;
    for (int i = 0; i < 4; ++i) {
        same = std::max(same, std::abs(q_[i] - o.q_[i]));
        flipped = std::max(flipped, std::abs(q_[i] + o.q_[i]));
    }
    return std::min(same, flipped) <= tol;
}

Vec3 Rotation::euler_zyx() const
{
    const double w = q_[0], x = q_[1], y = q_[2], z = q_[3];
    const double yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
    const double pitch = std::asin(std::clamp(2.0 * (w * y - z * x), -1.0, 1.0));
    const double roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
    return {yaw, pitch, roll};
}

Mat3 so3_right_jacobian(const Vec3& v)
{
    const double theta = norm(v);
    const Mat3 k = skew(v);
    const Mat3 k2 = k * k;
    double a, b;
    if (theta < 1e-4) {
        const double t2 = theta * theta;
        a = 0.5 - t2 / 24.0;
        b = 1.0 / 6.0 - t2 / 120.0;
    } else {
        const double t2 = theta * theta;
        a = (1.0 - std::cos(theta)) / t2;
        b = (theta - std::sin(theta)) / (t2 * theta);
    }
    Mat3 j = Mat3::identity();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) j.m[r][c] += -a * k.m[r][c] + b * k2.m[r][c];
    return j;
}

}  // namespace primvol
