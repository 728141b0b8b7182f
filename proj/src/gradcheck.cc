// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "primvol/autodiff.h"
#include "primvol/error.h"

namespace primvol {

const char* param_class_name(ParamClass c)
{
    switch (c) {
    case ParamClass::Rgb: return "rgb";
    case ParamClass::Alpha: return "alpha";
    case ParamClass::Position: return "position";
    case ParamClass::Rotation: return "rotation";
    case ParamClass::Scale: return "scale";
    }
    return "unknown";
}

double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

nlohmann::json GradCheckReport::to_json() const
{
    nlohmann::json j;
    j["pass"] = pass;
    auto& arr = j["classes"] = nlohmann::json::array();
    for (const ClassReport& c : classes) {
        arr.push_back({{"class", param_class_name(c.param)},
                       {"checked", c.checked},
                       {"skipped", c.skipped},
                       {"within_tolerance", c.within_tolerance},
                       {"max_rel_error", c.max_rel_error},
                       {"median_rel_error", c.median_rel_error},
                       {"tolerance", c.tolerance},
                       {"pass", c.pass}});
    }
    return j;
}

namespace {

bool is_spatial(ParamClass c)
{
    return c == ParamClass::Position || c == ParamClass::Rotation || c == ParamClass::Scale;
}

// Which primitives contribute at which samples, where saturation happens, and which
// trilinear cell (or clamp region) each lookup falls in.
using Structure = std::vector<std::int64_t>;

struct PixelValue {
    Vec3 color;
    Structure structure;
    bool near_clamp{false};     // a pre-clamp coverage sum within the guard band of 1
};

struct Guard {
    double clamp_band{0.0};
};

class PixelEvaluator {
public:
    PixelEvaluator(const Camera& camera, const RenderOptions& opts, const Vec3& background)
        : camera_(camera), opts_(opts), background_(background)
    {
    }

    std::vector<PixelValue> eval(const PrimitiveSet& scene, const std::vector<std::size_t>& pixels,
                                 const Guard& guard = {}) const
    {
        const Bvh bvh = Bvh::build(scene);
        const PreparedScene prepared(scene);
        std::vector<PixelValue> out(pixels.size());
        RayTape tape;
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            const int x = static_cast<int>(pixels[i] % camera_.width);
            const int y = static_cast<int>(pixels[i] / camera_.width);
            const Ray ray = camera_ray(camera_, x, y, opts_.near, opts_.far);
            tape.samples.clear();
            tape.entries.clear();
            const RayResult r = integrate_ray(ray, intersect(ray, scene, bvh), prepared, opts_, &tape);
            out[i].color = r.color + background_ * (1.0 - r.coverage);
            Structure& s = out[i].structure;
            for (const TapeSample& ts : tape.samples) {
                s.push_back(ts.saturated ? -1 : -2);
                if (std::abs(ts.coverage_before + ts.sigma * ts.dt - 1.0) < guard.clamp_band)
                    out[i].near_clamp = true;
                for (std::uint32_t j = 0; j < ts.entry_count; ++j) {
                    const TapeEntry& e = tape.entries[ts.first_entry + j];
                    s.push_back(e.primitive);
                    const TrilinearCoords tc = e.coords(scene.primitives[e.primitive].payload.resolution);
                    for (int a = 0; a < 3; ++a) s.push_back(2 * tc.lo[a] + (tc.clamped[a] ? 1 : 0));
                }
            }
        }
        return out;
    }

private:
    const Camera& camera_;
    const RenderOptions& opts_;
    Vec3 background_;
};

// Pixels whose rays pass within `margin` of primitive k's box.
std::vector<std::size_t> pixels_near(const Camera& camera, const RenderOptions& opts, const Primitive& prim,
                                     int k, double margin)
{
    Primitive inflated = prim;
    inflated.scale += Vec3::splat(margin);
    std::vector<std::size_t> out;
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const Ray ray = camera_ray(camera, x, y, opts.near, opts.far);
            if (intersect_primitive(ray, inflated, k))
                out.push_back(static_cast<std::size_t>(y) * camera.width + x);
        }
    return out;
}

// Applies a signed perturbation of one parameter.
void perturb(Primitive& p, ParamClass cls, std::size_t index, double delta)
{
    switch (cls) {
    case ParamClass::Rgb: p.payload.rgb[index] += delta; break;
    case ParamClass::Alpha: p.payload.alpha[index] += delta; break;
    case ParamClass::Position: p.position[static_cast<int>(index)] += delta; break;
    case ParamClass::Scale: p.scale[static_cast<int>(index)] += delta; break;
    case ParamClass::Rotation: {
        Vec3 e;
        e[static_cast<int>(index)] = delta;
        p.rotation = p.rotation * Rotation::from_axis_angle(e);
        break;
    }
    }
}

double analytic_value(const PrimitiveGrads& g, ParamClass cls, std::size_t index)
{
    switch (cls) {
    case ParamClass::Rgb: return g.rgb[index];
    case ParamClass::Alpha: return g.alpha[index];
    case ParamClass::Position: return g.position[static_cast<int>(index)];
    case ParamClass::Rotation: return g.rotation[static_cast<int>(index)];
    case ParamClass::Scale: return g.scale[static_cast<int>(index)];
    }
    return 0.0;
}

}  // namespace

GradCheckReport grad_check(const PrimitiveSet& scene_in, const Camera& camera, const RenderOptions& opts_in,
                           const GradCheckOptions& check)
{
    if (check.probes < 1) throw ArgumentError("grad_check needs at least one probe");
    if (!(check.h > 0.0)) throw ArgumentError("grad_check step h must be positive");
    RenderOptions opts = opts_in;
    opts.record_tape = true;
    PrimitiveSet scene = scene_in;
    const Vec3 bg = opts.background.value_or(scene.background);

    std::mt19937_64 rng(check.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    ImageBuffer upstream(camera.width, camera.height, 3);
    for (double& v : upstream.data()) v = unit(rng);

    const Bvh bvh = Bvh::build(scene);
    const RenderResult fwd = render(camera, scene, bvh, opts);
    const SceneGrads grads = backward(*fwd.tape, scene, upstream, {opts.threads});
    const RenderTape& tape = *fwd.tape;

    GradCheckReport report;
    report.pass = true;
    if (tape.entries.empty()) {
        for (ParamClass cls : kAllParamClasses) report.classes.push_back({cls, 0, 0, 0, 0.0, 0.0, 0.0, false});
        report.pass = false;
        return report;
    }

    const PixelEvaluator evaluator(camera, opts, bg);
    std::uniform_int_distribution<std::size_t> pick_entry(0, tape.entries.size() - 1);
    std::uniform_int_distribution<int> pick_axis(0, 2);
    std::uniform_int_distribution<int> pick_corner(0, 7);

    for (ParamClass cls : kAllParamClasses) {
        ClassReport rep;
        rep.param = cls;
        rep.tolerance = is_spatial(cls) ? check.spatial_tolerance : check.payload_tolerance;
        std::vector<double> errors;
        const int max_attempts = 20 * check.probes;
        for (int attempt = 0; attempt < max_attempts && rep.checked < check.probes; ++attempt) {
            const TapeEntry& entry = tape.entries[pick_entry(rng)];
            const int k = entry.primitive;
            Primitive& prim = scene.primitives[k];
            std::size_t index;
            if (is_spatial(cls)) {
                index = static_cast<std::size_t>(pick_axis(rng));
            } else {
                const TrilinearCoords tc = entry.coords(prim.payload.resolution);
                int corner = pick_corner(rng);
                while (tc.weight(corner) == 0.0) corner = (corner + 1) % 8;
                const std::size_t cell = tc.corner_cell(prim.payload.resolution, corner);
                index = cls == ParamClass::Rgb ? 3 * cell + static_cast<std::size_t>(pick_axis(rng)) : cell;
            }
            if (cls == ParamClass::Alpha && prim.payload.alpha[index] < check.h) {
                ++rep.skipped;  // would cross the non-negativity boundary
                continue;
            }

            const double margin = 4.0 * check.h * (1.0 + norm(prim.scale));
            const std::vector<std::size_t> pixels = pixels_near(camera, opts, prim, k, margin);
            const Primitive saved = prim;
            Guard guard;
            if (cls != ParamClass::Rgb) guard.clamp_band = 2.0 * check.h;
            const std::vector<PixelValue> base = evaluator.eval(scene, pixels, guard);
            perturb(prim, cls, index, check.h);
            const std::vector<PixelValue> plus = evaluator.eval(scene, pixels);
            prim = saved;
            perturb(prim, cls, index, -check.h);
            const std::vector<PixelValue> minus = evaluator.eval(scene, pixels);
            prim = saved;

            bool skip = false;
            double numeric = 0.0;
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                if (base[i].near_clamp || plus[i].structure != base[i].structure || minus[i].structure != base[i].structure) {
                    skip = true;
                    break;
                }
                numeric += dot(upstream.rgb(pixels[i]), plus[i].color - minus[i].color);
            }
            if (skip) {
                ++rep.skipped;
                continue;
            }
            numeric /= 2.0 * check.h;
            const double analytic = analytic_value(grads.primitives[k], cls, index);
            const double err = relative_error(analytic, numeric);
            errors.push_back(err);
            ++rep.checked;
            if (err < rep.tolerance) ++rep.within_tolerance;
            rep.max_rel_error = std::max(rep.max_rel_error, err);
        }
        if (!errors.empty()) {
            std::sort(errors.begin(), errors.end());
            rep.median_rel_error = errors[errors.size() / 2];
        }
        rep.pass = rep.checked > 0 &&
                   rep.within_tolerance >= check.required_fraction * static_cast<double>(rep.checked);
        report.pass = report.pass && rep.pass;
        report.classes.push_back(rep);
    }
    return report;
}

}  // namespace primvol
