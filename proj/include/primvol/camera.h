// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include "primvol/geom.h"

namespace primvol {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
    double t_min{0.0};
    double t_max{0.0};

    Vec3 at(double t) const { return origin + direction * t; }
};

/// Pinhole camera. Camera frame: +x right, +y down, +z forward (looking direction).
struct Camera {
    RigidTransform pose;  // camera-to-world
    double focal{1.0};    // pixels
    double cx{0.0};       // principal point, pixels
    double cy{0.0};
    int width{1};
    int height{1};

    /// Throws ArgumentError when focal <= 0 or the resolution is empty.
    void validate() const;

    Vec3 position() const { return pose.translation; }
    Vec3 forward() const { return pose.rotation.rotate({0.0, 0.0, 1.0}); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Camera at `eye` looking at `target`, principal point at the image center.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
               int height);

/// Ray through the center of pixel (px, py), with t in [near, far].
Ray camera_ray(const Camera& camera, int px, int py, double near, double far);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

}  // namespace primvol
