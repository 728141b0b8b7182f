// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/autodiff.h"

#include <cmath>
#include <string>

#include "primvol/error.h"
#include "primvol/parallel.h"

namespace primvol {

SceneGrads SceneGrads::zeros_like(const PrimitiveSet& scene)
{
    SceneGrads g;
    g.primitives.resize(scene.size());
    for (std::size_t k = 0; k < scene.size(); ++k) {
        const Payload& p = scene.primitives[k].payload;
        g.primitives[k].rgb.assign(p.rgb.size(), 0.0);
        g.primitives[k].alpha.assign(p.alpha.size(), 0.0);
    }
    return g;
}

bool SceneGrads::all_finite() const
{
    for (const PrimitiveGrads& p : primitives) {
        if (!is_finite(p.position) || !is_finite(p.rotation) || !is_finite(p.scale)) return false;
        for (double v : p.rgb)
            if (!std::isfinite(v)) return false;
        for (double v : p.alpha)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

bool SceneGrads::operator==(const SceneGrads& o) const
{
    if (primitives.size() != o.primitives.size()) return false;
    for (std::size_t k = 0; k < primitives.size(); ++k) {
        const PrimitiveGrads& a = primitives[k];
        const PrimitiveGrads& b = o.primitives[k];
        if (a.rgb != b.rgb || a.alpha != b.alpha || !(a.position == b.position) ||
            !(a.rotation == b.rotation) || !(a.scale == b.scale))
            return false;
    }
    return true;
}

double SceneGrads::max_abs() const
{
    double m = 0.0;
    for (const PrimitiveGrads& p : primitives) {
        m = std::max({m, primvol::max_abs(p.position), primvol::max_abs(p.rotation), primvol::max_abs(p.scale)});
        for (double v : p.rgb) m = std::max(m, std::abs(v));
        for (double v : p.alpha) m = std::max(m, std::abs(v));
    }
    return m;
}

namespace {

struct EntryAdjoint {
    double alpha_raw{0.0};
    Vec3 rgb;
    Vec3 local;
};

// Adjoints of every entry of one pixel, walking its samples back to front.
void pixel_backward(const RenderTape& tape, const PrimitiveSet& scene, const TapePixel& rec,
                    const Vec3& g, std::vector<EntryAdjoint>& adj)
{
    double coverage_bar = -dot(g, tape.background);
    for (std::uint32_t n = rec.sample_count; n-- > 0;) {
        const TapeSample& s = tape.samples[rec.first_sample + n];
        double sigma_bar;
        Vec3 premult_bar;
        if (s.saturated) {
            const double remaining = 1.0 - s.coverage_before;
            const Vec3 emitted = s.premultiplied / s.sigma;
            const double ge = dot(g, emitted);
            sigma_bar = -ge * remaining / s.sigma;
            premult_bar = g * (remaining / s.sigma);
            coverage_bar = -ge;
        } else {
            // Unclamped: the sample adds premult * dt to the color and sigma * dt to A.
            sigma_bar = coverage_bar * s.dt;
            premult_bar = g * s.dt;
        }
        for (std::uint32_t j = 0; j < s.entry_count; ++j) {
            const std::size_t idx = s.first_entry + j;
            const TapeEntry& e = tape.entries[idx];
            const Payload& payload = scene.primitives[e.primitive].payload;
            const int m = payload.resolution;
            const TrilinearCoords tc = e.coords(m);
            // Corner values (alpha, r, g, b), fetched once for the value and its slopes.
            double v[8][4];
            PayloadSample ps;
            for (int c = 0; c < 8; ++c) {
                const std::size_t cell = tc.corner_cell(m, c);
                v[c][0] = payload.alpha[cell];
                v[c][1] = payload.rgb[3 * cell];
                v[c][2] = payload.rgb[3 * cell + 1];
                v[c][3] = payload.rgb[3 * cell + 2];
                const double w = tc.weight(c);
                if (w == 0.0) continue;
                ps.alpha += w * v[c][0];
                ps.rgb.x += w * v[c][1];
                ps.rgb.y += w * v[c][2];
                ps.rgb.z += w * v[c][3];
            }
            const double weighted_bar = sigma_bar + dot(premult_bar, ps.rgb);
            EntryAdjoint& out = adj[idx];
            out.alpha_raw = weighted_bar * e.fade;
            out.rgb = premult_bar * (ps.alpha * e.fade);

            Vec3 local_bar;
            if (tape.fade.enabled) {
                Vec3 fade_grad;
                fade(e.local, tape.fade.exponent, fade_grad);
                local_bar += fade_grad * (weighted_bar * ps.alpha);
            }
            double q[8];
            for (int c = 0; c < 8; ++c)
                q[c] = out.alpha_raw * v[c][0] + out.rgb.x * v[c][1] + out.rgb.y * v[c][2] + out.rgb.z * v[c][3];
            const double fx = tc.frac[0], fy = tc.frac[1], fz = tc.frac[2];
            const double wy[2] = {1.0 - fy, fy}, wz[2] = {1.0 - fz, fz}, wx[2] = {1.0 - fx, fx};
            double d[3] = {0.0, 0.0, 0.0};
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a) {
                    // d/dfx: pairs differing in bit 0; d/dfy in bit 1; d/dfz in bit 2.
                    d[0] += wy[a] * wz[b] * (q[1 | (a << 1) | (b << 2)] - q[(a << 1) | (b << 2)]);
                    d[1] += wx[a] * wz[b] * (q[a | 2 | (b << 2)] - q[a | (b << 2)]);
                    d[2] += wx[a] * wy[b] * (q[a | (b << 1) | 4] - q[a | (b << 1)]);
                }
            for (int a = 0; a < 3; ++a)
                if (!tc.clamped[a]) local_bar[a] += d[a] * (0.5 * m);
            out.local = local_bar;
        }
    }
}

}  // namespace

SceneGrads backward(const RenderTape& tape, const PrimitiveSet& scene, const ImageBuffer& upstream,
                    const BackwardOptions& opts)
{
    if (upstream.width() != tape.width || upstream.height() != tape.height || upstream.channels() != 3)
        throw ArgumentError("upstream gradient must be " + std::to_string(tape.width) + "x" +
                            std::to_string(tape.height) + "x3");
    if (scene_fingerprint(scene) != tape.fingerprint)
        throw ArgumentError("render tape was recorded for a different scene");

    std::vector<EntryAdjoint> adj(tape.entries.size());
    constexpr std::size_t kChunk = 256;
    const std::size_t n_pixels = tape.pixels.size();
    parallel_for((n_pixels + kChunk - 1) / kChunk, opts.threads, [&](std::size_t chunk) {
        const std::size_t end = std::min(n_pixels, (chunk + 1) * kChunk);
        for (std::size_t p = chunk * kChunk; p < end; ++p) {
            const Vec3 g = upstream.rgb(p);
            if (tape.pixels[p].sample_count == 0 || g == Vec3{}) continue;
            pixel_backward(tape, scene, tape.pixels[p], g, adj);
        }
    });

    // Entries grouped by primitive, keeping tape order inside each group.
    const std::size_t n_prim = scene.size();
    std::vector<std::uint32_t> offsets(n_prim + 1, 0);
    for (const TapeEntry& e : tape.entries) ++offsets[e.primitive + 1];
    for (std::size_t k = 0; k < n_prim; ++k) offsets[k + 1] += offsets[k];
    std::vector<std::uint32_t> order(tape.entries.size());
    {
        std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < tape.entries.size(); ++i)
            order[cursor[tape.entries[i].primitive]++] = static_cast<std::uint32_t>(i);
    }

    SceneGrads grads = SceneGrads::zeros_like(scene);
    parallel_for(n_prim, opts.threads, [&](std::size_t k) {
        const Primitive& prim = scene.primitives[k];
        PrimitiveGrads& out = grads.primitives[k];
        const int m = prim.payload.resolution;
        Vec3 u_bar_rot;  // sum of R^T-frame position adjoints, rotated once at the end
        for (std::uint32_t o = offsets[k]; o < offsets[k + 1]; ++o) {
            const std::uint32_t i = order[o];
            const TapeEntry& e = tape.entries[i];
            const EntryAdjoint& a = adj[i];
            const TrilinearCoords tc = e.coords(m);
            for (int c = 0; c < 8; ++c) {
                const double w = tc.weight(c);
                if (w == 0.0) continue;
                const std::size_t cell = tc.corner_cell(m, c);
                out.alpha[cell] += w * a.alpha_raw;
                out.rgb[3 * cell] += w * a.rgb.x;
                out.rgb[3 * cell + 1] += w * a.rgb.y;
                out.rgb[3 * cell + 2] += w * a.rgb.z;
            }
            const Vec3 u_bar = div(a.local, prim.scale);
            const Vec3 u = mul(e.local, prim.scale);
            u_bar_rot += u_bar;
            for (int ax = 0; ax < 3; ++ax) out.scale[ax] -= a.local[ax] * e.local[ax] / prim.scale[ax];
            out.rotation += cross(u_bar, u);
        }
        out.position = -prim.rotation.rotate(u_bar_rot);
    });
    return grads;
}

}  // namespace primvol
