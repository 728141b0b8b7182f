// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/procedural.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "primvol/accel.h"
#include "primvol/error.h"

namespace primvol {

PrimitiveSet procedural_scene(const ProceduralSceneSpec& spec)
{
    if (spec.count < 0 || spec.resolution < 1 || !(spec.min_scale > 0.0) || spec.max_scale < spec.min_scale ||
        !(spec.density >= 0.0))
        throw ArgumentError("invalid procedural scene spec");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    PrimitiveSet scene;
    scene.background = {0.05, 0.05, 0.08};
    const int m = spec.resolution;
    for (int k = 0; k < spec.count; ++k) {
        Primitive p;
        p.position = Vec3{2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1} * spec.extent;
        p.rotation = Rotation::from_quaternion(n(rng), n(rng), n(rng), n(rng));
        for (int a = 0; a < 3; ++a) p.scale[a] = spec.min_scale + (spec.max_scale - spec.min_scale) * u(rng);
        p.payload = Payload(m);
        const Vec3 c0{u(rng), u(rng), u(rng)};
        const Vec3 c1{u(rng), u(rng), u(rng)};
        const double bands = 1.0 + 2.0 * u(rng);
        for (int iz = 0; iz < m; ++iz)
            for (int iy = 0; iy < m; ++iy)
                for (int ix = 0; ix < m; ++ix) {
                    const Vec3 l{(2.0 * ix + 1) / m - 1, (2.0 * iy + 1) / m - 1, (2.0 * iz + 1) / m - 1};
                    const std::size_t cell = p.payload.cell(ix, iy, iz);
                    const double t = 0.5 + 0.5 * std::sin(bands * 3.0 * (l.x + 0.5 * l.y));
                    const double r2 = std::min(1.0, dot(l, l) / 3.0);
                    p.payload.alpha[cell] = spec.density * (1.0 - r2);
                    const Vec3 c = c0 * (1.0 - t) + c1 * t;
                    for (int a = 0; a < 3; ++a) p.payload.rgb[3 * cell + a] = std::clamp(c[a], 0.0, 1.0);
                }
        scene.primitives.push_back(std::move(p));
    }
    return scene;
}

Camera orbit_camera(double distance, double azimuth, double elevation, double fov_half_tan, int width, int height)
{
    if (!(distance > 0.0) || !(fov_half_tan > 0.0)) throw ArgumentError("orbit camera needs positive distance and fov");
    const Vec3 eye{distance * std::cos(elevation) * std::sin(azimuth), -distance * std::sin(elevation),
                   -distance * std::cos(elevation) * std::cos(azimuth)};
    return look_at(eye, {}, {0.0, -1.0, 0.0}, 0.5 * width / fov_half_tan, width, height);
}

double span_fraction(const Camera& camera, const PrimitiveSet& scene, const RenderOptions& opts)
{
    const Bvh bvh = Bvh::build(scene);
    double total = 0.0;
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const Ray ray = camera_ray(camera, x, y, opts.near, opts.far);
            RayHitList hits = intersect(ray, scene, bvh);
            std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.t_enter < b.t_enter; });
            double covered = 0.0, lo = 0.0, hi = -1.0;
            for (const Hit& h : hits) {
                if (h.t_enter > hi) {
                    if (hi > lo) covered += hi - lo;
                    lo = h.t_enter;
                    hi = h.t_exit;
                } else {
                    hi = std::max(hi, h.t_exit);
                }
            }
            if (hi > lo) covered += hi - lo;
            total += covered / (opts.far - opts.near);
        }
    return total / static_cast<double>(camera.pixel_count());
}

}  // namespace primvol
