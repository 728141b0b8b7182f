// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/teacher.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "primvol/error.h"
#include "primvol/random.h"

namespace primvol {

void TeacherSpec::validate() const
{
    if (latent_dim < 1 || samples < 1 || views < 1) throw ArgumentError("teacher needs latent_dim, samples, views >= 1");
    if (min_blobs < 1 || max_blobs < min_blobs) throw ArgumentError("teacher blob count range is empty");
    if (!(min_radius > 0.0) || max_radius < min_radius) throw ArgumentError("teacher radius range is invalid");
    if (!(density > 0.0) || payload_resolution < 2) throw ArgumentError("teacher payload must be non-trivial");
    if (!(orbit_radius > 0.0) || !(fov_half_tan > 0.0) || width < 1 || height < 1)
        throw ArgumentError("teacher camera settings are invalid");
    if (!(step > 0.0)) throw ArgumentError("teacher step must be positive");
}

nlohmann::json TeacherSpec::to_json() const
{
    return {{"latent_dim", latent_dim},
            {"samples", samples},
            {"views", views},
            {"min_blobs", min_blobs},
            {"max_blobs", max_blobs},
            {"min_radius", min_radius},
            {"max_radius", max_radius},
            {"spread", spread},
            {"density", density},
            {"payload_resolution", payload_resolution},
            {"orbit_radius", orbit_radius},
            {"max_elevation", max_elevation},
            {"fov_half_tan", fov_half_tan},
            {"width", width},
            {"height", height},
            {"step", step},
            {"background", {background.x, background.y, background.z}},
            {"seed", seed}};
}

TeacherSpec TeacherSpec::from_json(const nlohmann::json& j)
{
    TeacherSpec s;
    s.latent_dim = j.value("latent_dim", s.latent_dim);
    s.samples = j.value("samples", s.samples);
    s.views = j.value("views", s.views);
    s.min_blobs = j.value("min_blobs", s.min_blobs);
    s.max_blobs = j.value("max_blobs", s.max_blobs);
    s.min_radius = j.value("min_radius", s.min_radius);
    s.max_radius = j.value("max_radius", s.max_radius);
    s.spread = j.value("spread", s.spread);
    s.density = j.value("density", s.density);
    s.payload_resolution = j.value("payload_resolution", s.payload_resolution);
    s.orbit_radius = j.value("orbit_radius", s.orbit_radius);
    s.max_elevation = j.value("max_elevation", s.max_elevation);
    s.fov_half_tan = j.value("fov_half_tan", s.fov_half_tan);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.step = j.value("step", s.step);
    if (j.contains("background")) {
        const auto b = j.at("background").get<std::vector<double>>();
        if (b.size() != 3) throw ArgumentError("teacher background needs 3 components");
        s.background = {b[0], b[1], b[2]};
    }
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

namespace {

enum Stream : std::uint64_t { kFamily = 1, kLatent = 2, kCamera = 3 };

std::vector<double> random_matrix(std::mt19937_64& rng, int dim, double scale)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> m(3 * static_cast<std::size_t>(dim));
    for (double& v : m) v = u(rng);
    return m;
}

Vec3 random_phase(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    return {u(rng), u(rng), u(rng)};
}

// sin(A w + phase) per component.
Vec3 wave(const std::vector<double>& a, const Vec3& phase, const std::vector<double>& w)
{
    Vec3 out;
    const std::size_t d = w.size();
    for (int c = 0; c < 3; ++c) {
        double s = phase[c];
        for (std::size_t i = 0; i < d; ++i) s += a[c * d + i] * w[i];
        out[c] = std::sin(s);
    }
    return out;
}

Payload blob_payload(int m, const Vec3& color, double density)
{
    Payload p(m);
    for (int iz = 0; iz < m; ++iz)
        for (int iy = 0; iy < m; ++iy)
            for (int ix = 0; ix < m; ++ix) {
                const Vec3 local{(2.0 * ix + 1.0) / m - 1.0, (2.0 * iy + 1.0) / m - 1.0, (2.0 * iz + 1.0) / m - 1.0};
                const double r2 = dot(local, local);
                const double fall = r2 < 1.0 ? (1.0 - r2) * (1.0 - r2) : 0.0;
                const std::size_t cell = p.cell(ix, iy, iz);
                p.alpha[cell] = density * fall;
                // Light from above (-y in the local frame) with a soft floor.
                const double shade = 0.75 + 0.25 * std::clamp(-local.y, -1.0, 1.0);
                for (int c = 0; c < 3; ++c) p.rgb[3 * cell + c] = std::clamp(color[c] * shade, 0.0, 1.0);
            }
    return p;
}

}  // namespace

TeacherFamily teacher_family(const TeacherSpec& spec)
{
    spec.validate();
    TeacherFamily fam;
    fam.spec = spec;
    std::mt19937_64 rng(derive_seed(spec.seed, kFamily));
    const int count = std::uniform_int_distribution<int>(spec.min_blobs, spec.max_blobs)(rng);
    std::uniform_real_distribution<double> pos(-spec.spread, spec.spread);
    std::uniform_real_distribution<double> rad(spec.min_radius, spec.max_radius);
    std::uniform_real_distribution<double> col(0.2, 0.8);
    std::uniform_real_distribution<double> ang(-1.0, 1.0);
    for (int i = 0; i < count; ++i) {
        BlobParams b;
        b.center = {pos(rng), pos(rng), pos(rng)};
        b.radius = {rad(rng), rad(rng), rad(rng)};
        b.color = {col(rng), col(rng), col(rng)};
        b.axis_angle = {ang(rng), ang(rng), ang(rng)};
        b.center_freq = random_matrix(rng, spec.latent_dim, 1.5);
        b.center_phase = random_phase(rng);
        b.radius_freq = random_matrix(rng, spec.latent_dim, 1.5);
        b.radius_phase = random_phase(rng);
        b.color_freq = random_matrix(rng, spec.latent_dim, 1.5);
        b.color_phase = random_phase(rng);
        fam.blobs.push_back(std::move(b));
    }
    return fam;
}

std::vector<double> teacher_latent(const TeacherSpec& spec, int sample)
{
    std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, kLatent), static_cast<std::uint64_t>(sample)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> w(spec.latent_dim);
    for (double& v : w) v = u(rng);
    return w;
}

Camera teacher_camera(const TeacherSpec& spec, int sample, int view)
{
    std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, kCamera),
                                    (static_cast<std::uint64_t>(sample) << 20) ^ static_cast<std::uint64_t>(view)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double azimuth = 2.0 * std::numbers::pi * (view + u(rng)) / spec.views;
    const double elevation = spec.max_elevation * (2.0 * u(rng) - 1.0);
    const Vec3 eye{spec.orbit_radius * std::cos(elevation) * std::sin(azimuth),
                   -spec.orbit_radius * std::sin(elevation),
                   -spec.orbit_radius * std::cos(elevation) * std::cos(azimuth)};
    const double focal = 0.5 * spec.width / spec.fov_half_tan;
    return look_at(eye, {}, {0.0, -1.0, 0.0}, focal, spec.width, spec.height);
}

PrimitiveSet teacher_scene(const TeacherFamily& family, const std::vector<double>& w)
{
    const TeacherSpec& spec = family.spec;
    if (static_cast<int>(w.size()) != spec.latent_dim)
        throw ArgumentError("teacher latent must have " + std::to_string(spec.latent_dim) + " components");
    PrimitiveSet scene;
    scene.background = spec.background;
    for (const BlobParams& b : family.blobs) {
        Primitive p;
        p.position = b.center + wave(b.center_freq, b.center_phase, w) * 0.2;
        p.rotation = Rotation::from_axis_angle(b.axis_angle);
        const Vec3 rw = wave(b.radius_freq, b.radius_phase, w);
        p.scale = mul(b.radius, Vec3{1.0 + 0.2 * rw.x, 1.0 + 0.2 * rw.y, 1.0 + 0.2 * rw.z});
        const Vec3 cw = wave(b.color_freq, b.color_phase, w);
        Vec3 color;
        for (int c = 0; c < 3; ++c) color[c] = std::clamp(b.color[c] + 0.2 * cw[c], 0.05, 0.95);
        p.payload = blob_payload(spec.payload_resolution, color, spec.density);
        scene.primitives.push_back(std::move(p));
    }
    return scene;
}

RenderOptions teacher_render_options(const TeacherSpec& spec)
{
    RenderOptions o;
    o.step = spec.step;
    o.near = std::max(1e-3, spec.orbit_radius - 2.5);
    o.far = spec.orbit_radius + 2.5;
    o.max_samples = static_cast<int>(std::ceil((o.far - o.near) / o.step)) + 1;
    o.background = spec.background;
    return o;
}

MultiViewDataset make_teacher(const TeacherSpec& spec, const std::filesystem::path& out_dir)
{
    const TeacherFamily family = teacher_family(spec);
    const RenderOptions opts = teacher_render_options(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
    {
        std::ofstream meta(out_dir / "teacher.json");
        if (!meta) throw IoError("cannot write " + (out_dir / "teacher.json").string());
        meta << spec.to_json().dump(2) << '\n';
    }
    MultiViewDataset ds;
    ds.root = out_dir;
    for (int s = 0; s < spec.samples; ++s) {
        const std::vector<double> w = teacher_latent(spec, s);
        const PrimitiveSet scene = teacher_scene(family, w);
        for (int v = 0; v < spec.views; ++v) {
            ViewRecord r;
            r.camera = teacher_camera(spec, s, v);
            r.latent = w;
            r.sample = s;
            r.view = v;
            char name[64];
            std::snprintf(name, sizeof name, "images/s%05d_v%03d.pfm", s, v);
            r.image = name;
            write_pfm(out_dir / r.image, render_dense_oracle(r.camera, scene, opts).image);
            ds.records.push_back(std::move(r));
        }
    }
    save_manifest(ds, out_dir / kManifestName);
    return ds;
}

}  // namespace primvol
