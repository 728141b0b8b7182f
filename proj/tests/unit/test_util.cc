// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.h"

#include <cmath>

namespace primvol::testing {

Rotation random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return Rotation::from_quaternion(n(rng), n(rng), n(rng), n(rng));
}

PrimitiveSet random_scene(std::mt19937_64& rng, const SceneRecipe& r)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PrimitiveSet scene;
    scene.background = {0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng)};
    const int m = r.resolution;
    const int side = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(r.count))));
    for (int k = 0; k < r.count; ++k) {
        Primitive p;
        p.scale = {r.min_scale + (r.max_scale - r.min_scale) * u(rng),
                   r.min_scale + (r.max_scale - r.min_scale) * u(rng),
                   r.min_scale + (r.max_scale - r.min_scale) * u(rng)};
        p.rotation = random_rotation(rng);
        if (r.overlap) {
            p.position = {r.extent * (2 * u(rng) - 1), r.extent * (2 * u(rng) - 1), r.extent * (2 * u(rng) - 1)};
        } else {
            // One primitive per lattice cell, shrunk to fit inside its cell.
            const int ix = k % side, iy = (k / side) % side, iz = k / (side * side);
            const double cell = 2.0 * r.extent / side;
            p.position = {-r.extent + (ix + 0.5) * cell, -r.extent + (iy + 0.5) * cell,
                          -r.extent + (iz + 0.5) * cell};
            const double limit = 0.5 * cell / std::sqrt(3.0) * 0.95;
            for (int a = 0; a < 3; ++a) p.scale[a] = std::min(p.scale[a], limit);
        }
        p.payload = Payload(m);
        const Vec3 f{1 + 2 * u(rng), 1 + 2 * u(rng), 1 + 2 * u(rng)};
        const Vec3 ph{6.3 * u(rng), 6.3 * u(rng), 6.3 * u(rng)};
        const Vec3 base{u(rng), u(rng), u(rng)};
        for (int iz = 0; iz < m; ++iz)
            for (int iy = 0; iy < m; ++iy)
                for (int ix = 0; ix < m; ++ix) {
                    const double x = -1.0 + (2.0 * ix + 1.0) / m;
                    const double y = -1.0 + (2.0 * iy + 1.0) / m;
                    const double z = -1.0 + (2.0 * iz + 1.0) / m;
                    const std::size_t c = p.payload.cell(ix, iy, iz);
                    const double s = std::sin(f.x * x + ph.x) * std::sin(f.y * y + ph.y) * std::sin(f.z * z + ph.z);
                    p.payload.alpha[c] = r.density * (0.55 + 0.45 * s);
                    p.payload.rgb[3 * c] = 0.1 + 0.8 * (0.5 + 0.5 * std::sin(f.x * y + base.x * 6));
                    p.payload.rgb[3 * c + 1] = 0.1 + 0.8 * (0.5 + 0.5 * std::sin(f.y * z + base.y * 6));
                    p.payload.rgb[3 * c + 2] = 0.1 + 0.8 * (0.5 + 0.5 * std::sin(f.z * x + base.z * 6));
                }
        scene.primitives.push_back(std::move(p));
    }
    return scene;
}

PrimitiveSet box_scene(const Vec3& center, const Vec3& half_extent, const Vec3& color, double density,
                       int resolution)
{
    PrimitiveSet scene;
    Primitive p;
    p.position = center;
    p.scale = half_extent;
    p.payload = Payload(resolution, color, density);
    scene.primitives.push_back(p);
    return scene;
}

Camera front_camera(int width, int height, double distance, double fov_half_tan)
{
    const double focal = 0.5 * width / fov_half_tan;
    return look_at({0.0, 0.0, -distance}, {0.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, focal, width, height);
}

RenderOptions test_options(double step)
{
    RenderOptions o;
    o.step = step;
    o.near = 1.0;
    o.far = 7.0;
    o.max_samples = 100000;
    return o;
}

}  // namespace primvol::testing
