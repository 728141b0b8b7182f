// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "primvol/camera.h"
#include "primvol/render.h"
#include "primvol/scene.h"

namespace primvol {

/// Randomly placed, randomly oriented primitives with smooth banded payloads.
struct ProceduralSceneSpec {
    int count{16};
    int resolution{8};
    double extent{1.0};  // centers in [-extent, extent]^3
    double min_scale{0.15};
    double max_scale{0.35};
    double density{3.0};
    std::uint64_t seed{42};
};

PrimitiveSet procedural_scene(const ProceduralSceneSpec& spec);

/// Camera on a sphere around the origin; azimuth and elevation in radians, +y down.
Camera orbit_camera(double distance, double azimuth, double elevation, double fov_half_tan, int width, int height);

/// Mean over the camera's rays of the fraction of [near, far] covered by the union of
/// primitive box intervals.
double span_fraction(const Camera& camera, const PrimitiveSet& scene, const RenderOptions& opts);

}  // namespace primvol
