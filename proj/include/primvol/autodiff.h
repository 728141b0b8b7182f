// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "primvol/camera.h"
#include "primvol/image.h"
#include "primvol/render.h"
#include "primvol/scene.h"

namespace primvol {

/// Gradient of a scalar loss with respect to one primitive.
struct PrimitiveGrads {
    std::vector<double> rgb;    // M^3 * 3, interleaved like Payload::rgb
    std::vector<double> alpha;  // M^3
    Vec3 position;
    Vec3 rotation;  // right-tangent axis-angle: R * exp(e)
    Vec3 scale;
};

struct SceneGrads {
    std::vector<PrimitiveGrads> primitives;

    static SceneGrads zeros_like(const PrimitiveSet& scene);
    std::size_t size() const { return primitives.size(); }
    bool all_finite() const;
    bool operator==(const SceneGrads& o) const;
    /// Largest absolute component across all gradients.
    double max_abs() const;
};

struct BackwardOptions {
    int threads{0};
};

/// Reverse pass of the forward rules recorded in `tape`. `upstream` is dL/dimage with
/// the tape's resolution and 3 channels. Throws ArgumentError when the tape was recorded
/// for a different scene or the shapes disagree.
SceneGrads backward(const RenderTape& tape, const PrimitiveSet& scene, const ImageBuffer& upstream,
                    const BackwardOptions& opts = {});

enum class ParamClass { Rgb, Alpha, Position, Rotation, Scale };
inline constexpr std::array<ParamClass, 5> kAllParamClasses{ParamClass::Rgb, ParamClass::Alpha,
                                                             ParamClass::Position,
                                                             ParamClass::Rotation, ParamClass::Scale};
const char* param_class_name(ParamClass c);

struct GradCheckOptions {
    int probes{500};  // per parameter class
    double h{1e-4};
    std::uint64_t seed{42};
    double payload_tolerance{1e-5};
    double spatial_tolerance{5e-3};
    double required_fraction{0.95};
};

struct ClassReport {
    ParamClass param{ParamClass::Rgb};
    int checked{0};
    int skipped{0};
    int within_tolerance{0};
    double max_rel_error{0.0};
    double median_rel_error{0.0};
    double tolerance{0.0};
    bool pass{false};
};

struct GradCheckReport {
    std::vector<ClassReport> classes;
    bool pass{false};

    nlohmann::json to_json() const;
};

/// |a - f| / max(|a|, |f|, 1e-8).
double relative_error(double analytic, double numeric);

/// Compares backward against central differences of L = sum(g * image) for a random g,
/// on randomly chosen parameters of every class. A probe is skipped when a pre-clamp
/// coverage sum lies within 2h of 1, or when the +-h renders change which samples
/// saturate, which primitives contribute to a sample (a box face was crossed), or which
/// trilinear cell or clamp region a lookup falls in.
GradCheckReport grad_check(const PrimitiveSet& scene, const Camera& camera, const RenderOptions& opts,
                           const GradCheckOptions& check = {});

}  // namespace primvol
