// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "primvol/accel.h"
#include "primvol/camera.h"
#include "primvol/image.h"
#include "primvol/scene.h"

namespace primvol {

struct RenderOptions {
    double step{0.01};  // world units
    int max_samples{4096};
    /// Overrides the scene background when set.
    std::optional<Vec3> background;
    FadeParams fade;
    bool record_tape{false};
    double near{0.1};
    double far{10.0};
    int threads{0};  // 0: resolve_threads default
    int tile_size{16};

    /// Throws ArgumentError on a non-positive step, max_samples < 1, near >= far, or a
    /// non-finite fade exponent below 1.
    void validate() const;
};

/// Samples of a ray lie on one grid shared by every renderer: step i covers
/// [t_min + i*step, min(t_min + (i+1)*step, t_max)] and is evaluated at its midpoint.
/// Only the last step can be partial.
struct SampleGrid {
    double t_min{0.0};
    double t_max{0.0};
    double step{1.0};
    int count{0};
    bool truncated{false};  // max_samples cut the grid short of t_max

    static SampleGrid for_ray(const Ray& ray, const RenderOptions& opts);
    double start(int i) const { return t_min + i * step; }
    double length(int i) const;
    double midpoint(int i) const { return start(i) + 0.5 * length(i); }
};

/// Per-primitive world-to-local frames with cached rotation matrices and inverse scales.
class PreparedScene {
public:
    explicit PreparedScene(const PrimitiveSet& scene);

    const PrimitiveSet& scene() const { return *scene_; }
    std::size_t size() const { return frames_.size(); }
    /// Same contract as evaluate_primitive; the box test rejects per axis.
    bool evaluate(int k, const Vec3& x, const FadeParams& fade_params, PrimitiveContribution& out) const;
    /// field_eval over the cached frames (primitive index order).
    FieldSample field(const Vec3& x, const FadeParams& fade_params) const;

private:
    struct Frame {
        std::array<Vec3, 3> rows;  // rows of diag(1/s) R^T
        Vec3 position;
    };
    const PrimitiveSet* scene_;
    std::vector<Frame> frames_;
};

/// One recorded primitive contribution at a sample. Lookup coordinates are recomputed
/// from `local`, which reproduces the forward pass exactly.
struct TapeEntry {
    std::int32_t primitive{0};
    Vec3 local;
    double fade{1.0};

    TrilinearCoords coords(int resolution) const { return trilinear_coords(resolution, local); }
};

struct TapeSample {
    double dt{0.0};
    double coverage_before{0.0};
    double sigma{0.0};
    Vec3 premultiplied;
    bool saturated{false};
    std::uint32_t first_entry{0};
    std::uint32_t entry_count{0};
};

struct TapePixel {
    std::uint32_t first_sample{0};
    std::uint32_t sample_count{0};
    double coverage{0.0};
};

/// Everything the backward pass needs, recorded during a forward render. Samples are
/// stored in tile order; pixel records are indexed by y * width + x.
struct RenderTape {
    int width{0};
    int height{0};
    Vec3 background;
    FadeParams fade;
    std::uint64_t fingerprint{0};
    std::vector<TapePixel> pixels;
    std::vector<TapeSample> samples;
    std::vector<TapeEntry> entries;
};

/// Hash over primitive placement and payload bits; ties a tape to its scene.
std::uint64_t scene_fingerprint(const PrimitiveSet& scene);

struct RayResult {
    Vec3 color;
    double coverage{0.0};
};

/// Collects samples for one ray; pass to integrate_ray to record a tape.
struct RayTape {
    std::vector<TapeSample> samples;
    std::vector<TapeEntry> entries;
};

/// Clamped-linear accumulation over the grid samples inside the hit intervals.
RayResult integrate_ray(const Ray& ray, const RayHitList& hits, const PreparedScene& scene,
                        const RenderOptions& opts, RayTape* tape = nullptr);
RayResult integrate_ray(const Ray& ray, const RayHitList& hits, const PrimitiveSet& scene,
                        const RenderOptions& opts);

/// Every grid sample of the ray, every primitive, no acceleration.
RayResult integrate_ray_dense(const Ray& ray, const PreparedScene& scene, const RenderOptions& opts);

struct RenderResult {
    ImageBuffer image;     // 3 channels
    ImageBuffer coverage;  // 1 channel
    std::optional<RenderTape> tape;
};

RenderResult render(const Camera& camera, const PrimitiveSet& scene, const Bvh& bvh,
                    const RenderOptions& opts);
RenderResult render_dense_oracle(const Camera& camera, const PrimitiveSet& scene,
                                 const RenderOptions& opts);

/// Deterministic 24-bit color for a primitive index; distinct for indices < 2^24.
Vec3 palette_color(std::uint32_t index);

/// Primitives drawn in their palette colors with payload alpha.
ImageBuffer render_primitive_overlay(const Camera& camera, const PrimitiveSet& scene, const Bvh& bvh,
                                     const RenderOptions& opts = {});

/// Recomputes the image from the tape and the scene payloads.
ImageBuffer replay_tape(const RenderTape& tape, const PrimitiveSet& scene);

}  // namespace primvol
