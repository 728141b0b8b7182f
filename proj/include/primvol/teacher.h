// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "primvol/camera.h"
#include "primvol/dataset.h"
#include "primvol/render.h"
#include "primvol/scene.h"

namespace primvol {

/// Procedural stand-in for a pretrained 3D-aware image generator: every latent code maps
/// smoothly to a scene of soft ellipsoidal blobs.
struct TeacherSpec {
    int latent_dim{2};
    int samples{100};
    int views{16};
    int min_blobs{3};
    int max_blobs{8};
    double min_radius{0.2};
    double max_radius{0.4};
    double spread{0.35};       // base blob centers lie in [-spread, spread]^3
    double density{6.0};       // peak blob density per world unit
    int payload_resolution{12};
    // Orbit cameras looking at the origin.
    double orbit_radius{3.0};
    double max_elevation{0.5};  // radians
    double fov_half_tan{0.35};
    int width{128};
    int height{128};
    double step{0.01};
    Vec3 background{0.0, 0.0, 0.0};
    std::uint64_t seed{42};

    void validate() const;
    nlohmann::json to_json() const;
    static TeacherSpec from_json(const nlohmann::json& j);
};

struct BlobParams {
    Vec3 center;
    Vec3 radius;
    Vec3 color;
    Vec3 axis_angle;
    // Smooth latent dependence: value(w) = base + amplitude * sin(A w + phase), per component.
    std::vector<double> center_freq;  // 3 x latent_dim
    Vec3 center_phase;
    std::vector<double> radius_freq;
    Vec3 radius_phase;
    std::vector<double> color_freq;
    Vec3 color_phase;
};

/// Blob layout shared by every sample; the blob count is drawn from the seed.
struct TeacherFamily {
    TeacherSpec spec;
    std::vector<BlobParams> blobs;
};

TeacherFamily teacher_family(const TeacherSpec& spec);
/// Latent of sample i, uniform in [-1, 1]^d; a pure function of (seed, i).
std::vector<double> teacher_latent(const TeacherSpec& spec, int sample);
/// Camera of view j of sample i: azimuth spread evenly over the views with seeded jitter.
Camera teacher_camera(const TeacherSpec& spec, int sample, int view);
PrimitiveSet teacher_scene(const TeacherFamily& family, const std::vector<double>& w);
RenderOptions teacher_render_options(const TeacherSpec& spec);

/// Renders samples x views images with the dense oracle into out_dir/images, writes
/// out_dir/manifest.jsonl and out_dir/teacher.json, and returns the dataset.
MultiViewDataset make_teacher(const TeacherSpec& spec, const std::filesystem::path& out_dir);

}  // namespace primvol
