// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/scene.h"

#include <cmath>
#include <string>

#include "primvol/error.h"

namespace primvol {

namespace {

// |x|^p with an exact multiplication chain for the default exponent.
inline double pow_abs(double x, double p)
{
    const double a = std::abs(x);
    if (p == 8.0) {
        const double a2 = a * a;
        const double a4 = a2 * a2;
        return a4 * a4;
    }
    return std::pow(a, p);
}

inline bool inside_box(const Vec3& l)
{
    return l.x >= -1.0 && l.x <= 1.0 && l.y >= -1.0 && l.y <= 1.0 && l.z >= -1.0 && l.z <= 1.0;
}

}  // namespace

double fade(const Vec3& local, double exponent)
{
    if (!inside_box(local)) return 0.0;
    double f = 1.0;
    for (int a = 0; a < 3; ++a) f *= 1.0 - pow_abs(local[a], exponent);
    return std::clamp(f, 0.0, 1.0);
}

double fade(const Vec3& local, double exponent, Vec3& grad)
{
    grad = {};
    if (!inside_box(local)) return 0.0;
    std::array<double, 3> factor{}, dfactor{};
    for (int a = 0; a < 3; ++a) {
        const double l = local[a];
        const double p = pow_abs(l, exponent);
        factor[a] = 1.0 - p;
        // d/dl (1 - |l|^rho) = -rho |l|^(rho-1) sign(l) = -rho p / l
        dfactor[a] = l == 0.0 ? 0.0 : -exponent * p / l;
    }
    const double f = factor[0] * factor[1] * factor[2];
    grad = {dfactor[0] * factor[1] * factor[2], factor[0] * dfactor[1] * factor[2],
            factor[0] * factor[1] * dfactor[2]};
    return std::clamp(f, 0.0, 1.0);
}

Payload::Payload(int m, const Vec3& color, double density) : resolution(m)
{
    if (m < 1) throw ArgumentError("payload resolution must be >= 1");
    const std::size_t cells = static_cast<std::size_t>(m) * m * m;
    rgb.resize(cells * 3);
    for (std::size_t i = 0; i < cells; ++i) {
        rgb[3 * i] = color.x;
        rgb[3 * i + 1] = color.y;
        rgb[3 * i + 2] = color.z;
    }
    alpha.assign(cells, density);
}

void Payload::validate() const
{
    if (resolution < 1) throw ArgumentError("payload resolution must be >= 1");
    const std::size_t cells = static_cast<std::size_t>(resolution) * resolution * resolution;
    if (alpha.size() != cells || rgb.size() != cells * 3)
        throw ArgumentError("payload arrays do not match resolution " + std::to_string(resolution));
    for (double a : alpha)
        if (!(a >= 0.0) || !std::isfinite(a))
            throw ArgumentError("payload alpha must be finite and non-negative");
    for (double c : rgb)
        if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("payload rgb must lie in [0,1]");
}

PayloadSample sample_payload(const Payload& payload, const TrilinearCoords& tc)
{
    PayloadSample s;
    const int m = payload.resolution;
    for (int c = 0; c < 8; ++c) {
        const double w = tc.weight(c);
        if (w == 0.0) continue;
        const std::size_t cell = tc.corner_cell(m, c);
        s.alpha += w * payload.alpha[cell];
        s.rgb.x += w * payload.rgb[3 * cell];
        s.rgb.y += w * payload.rgb[3 * cell + 1];
        s.rgb.z += w * payload.rgb[3 * cell + 2];
    }
    return s;
}

PayloadSample sample_payload(const Payload& payload, const Vec3& local)
{
    if (!inside_box(local)) return {};
    return sample_payload(payload, trilinear_coords(payload.resolution, local));
}

std::array<Vec3, 8> Primitive::corners() const
{
    std::array<Vec3, 8> out;
    for (int c = 0; c < 8; ++c)
        out[c] = local_to_world({(c & 1) ? 1.0 : -1.0, (c & 2) ? 1.0 : -1.0, (c & 4) ? 1.0 : -1.0});
    return out;
}

void PrimitiveSet::validate() const
{
    if (primitives.empty()) throw ArgumentError("scene has no primitives");
    const int m = primitives.front().payload.resolution;
    for (std::size_t k = 0; k < primitives.size(); ++k) {
        const Primitive& p = primitives[k];
        if (!(p.scale.x > 0.0 && p.scale.y > 0.0 && p.scale.z > 0.0))
            throw ArgumentError("primitive " + std::to_string(k) + " has a non-positive scale");
        if (!is_finite(p.position) || !is_finite(p.scale))
            throw ArgumentError("primitive " + std::to_string(k) + " has a non-finite placement");
        if (p.payload.resolution != m)
            throw ArgumentError("primitive payload resolutions differ");
        p.payload.validate();
    }
}

DeltaSet DeltaSet::zeros(std::size_t n)
{
    DeltaSet d;
    d.translation.assign(n, {});
    d.rotation.assign(n, {});
    d.scale.assign(n, {});
    return d;
}

Composition compose(const AnchorSet& anchors, const DeltaSet& deltas, std::vector<Payload> payloads,
                    const Vec3& background)
{
    const std::size_t n = anchors.size();
    if (deltas.translation.size() != n || deltas.rotation.size() != n || deltas.scale.size() != n ||
        payloads.size() != n)
        throw ArgumentError("compose: anchor, delta and payload counts differ (" +
                            std::to_string(n) + " anchors, " + std::to_string(deltas.size()) +
                            " deltas, " + std::to_string(payloads.size()) + " payloads)");
    Composition out;
    out.scene.background = background;
    out.scene.primitives.resize(n);
    out.scale_clamped.assign(n, {false, false, false});
    for (std::size_t k = 0; k < n; ++k) {
        Primitive& p = out.scene.primitives[k];
        p.position = anchors.positions[k] + deltas.translation[k];
        p.rotation = anchors.rotations[k] * Rotation::from_axis_angle(deltas.rotation[k]);
        for (int a = 0; a < 3; ++a) {
            const double s = anchors.base_scale[a] + deltas.scale[k][a];
            if (!(s > kMinScale)) {
                p.scale[a] = kMinScale;
                out.scale_clamped[k][a] = true;
                out.any_scale_clamped = true;
            } else {
                p.scale[a] = s;
            }
        }
        p.payload = std::move(payloads[k]);
    }
    return out;
}

bool evaluate_primitive(const Primitive& prim, const Vec3& x, const FadeParams& fade_params,
                        PrimitiveContribution& out)
{
    out.local = prim.world_to_local(x);
    if (!inside_box(out.local)) return false;
    out.tri = trilinear_coords(prim.payload.resolution, out.local);
    const PayloadSample s = sample_payload(prim.payload, out.tri);
    out.alpha_raw = s.alpha;
    out.rgb = s.rgb;
    out.fade = fade_params.enabled ? fade(out.local, fade_params.exponent) : 1.0;
    return true;
}

FieldSample field_eval(const PrimitiveSet& scene, const Vec3& x, const FadeParams& fade_params)
{
    FieldSample f;
    PrimitiveContribution c;
    for (const Primitive& prim : scene.primitives) {
        if (!evaluate_primitive(prim, x, fade_params, c)) continue;
        const double a = c.alpha();
        f.alpha += a;
        f.premultiplied += c.rgb * a;
    }
    return f;
}

}  // namespace primvol
