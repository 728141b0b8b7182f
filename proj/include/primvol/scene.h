// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "primvol/geom.h"
#include "primvol/guidemesh.h"

namespace primvol {

/// Lower bound applied to every composed primitive half-extent.
inline constexpr double kMinScale = 1e-4;
/// Payload resolution used by the full-size model.
inline constexpr int kDefaultPayloadResolution = 32;

/// Opacity window toward primitive boundaries: prod_axis (1 - |x|^exponent).
struct FadeParams {
    double exponent{8.0};
    bool enabled{true};
};

/// Window value at a local coordinate; 1 at the center, 0 on the box faces and outside.
double fade(const Vec3& local, double exponent);
/// Same, writing d fade / d local into `grad`.
double fade(const Vec3& local, double exponent, Vec3& grad);

/// Voxel content of one primitive: straight rgb in [0,1] and density alpha >= 0 (per world
/// unit) on an M^3 grid of cell-centered nodes. Node (ix, iy, iz) has cell index
/// (iz * M + iy) * M + ix; rgb is interleaved per cell.
struct Payload {
    int resolution{0};
    std::vector<double> rgb;
    std::vector<double> alpha;

    Payload() = default;
    explicit Payload(int m, const Vec3& color = {}, double density = 0.0);

    std::size_t cell_count() const { return alpha.size(); }
    std::size_t cell(int ix, int iy, int iz) const
    {
        return (static_cast<std::size_t>(iz) * resolution + iy) * resolution + ix;
    }
    /// Throws ArgumentError on shape mismatch, NaN, negative alpha, or rgb outside [0,1].
    void validate() const;

    bool operator==(const Payload&) const = default;
};

/// Trilinear lookup position on a cell-centered grid. Queries in the outer half cell
/// clamp to the edge node (clamped axes have zero derivative).
struct TrilinearCoords {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    std::array<double, 3> frac{};
    std::array<bool, 3> clamped{};

    /// Weight of corner c (bit 0: x, bit 1: y, bit 2: z; set bit selects `hi`).
    double weight(int c) const
    {
        return ((c & 1) ? frac[0] : 1.0 - frac[0]) * ((c & 2) ? frac[1] : 1.0 - frac[1]) *
               ((c & 4) ? frac[2] : 1.0 - frac[2]);
    }
    std::size_t corner_cell(int resolution, int c) const
    {
        const std::size_t ix = (c & 1) ? hi[0] : lo[0];
        const std::size_t iy = (c & 2) ? hi[1] : lo[1];
        const std::size_t iz = (c & 4) ? hi[2] : lo[2];
        return (iz * resolution + iy) * resolution + ix;
    }
};

inline TrilinearCoords trilinear_coords(int resolution, const Vec3& local)
{
    TrilinearCoords tc;
    const double half_m = 0.5 * resolution;
    for (int a = 0; a < 3; ++a) {
        // Node i sits at local -1 + (2i + 1) / M.
        const double q = (local[a] + 1.0) * half_m - 0.5;
        if (q <= 0.0) {
            tc.lo[a] = tc.hi[a] = 0;
            tc.frac[a] = 0.0;
            tc.clamped[a] = true;
        } else if (q >= resolution - 1) {
            tc.lo[a] = tc.hi[a] = resolution - 1;
            tc.frac[a] = 0.0;
            tc.clamped[a] = true;
        } else {
            const int i = static_cast<int>(q);
            tc.lo[a] = i;
            tc.hi[a] = i + 1;
            tc.frac[a] = q - i;
            tc.clamped[a] = false;
        }
    }
    return tc;
}

struct PayloadSample {
    Vec3 rgb;
    double alpha{0.0};
};

PayloadSample sample_payload(const Payload& payload, const TrilinearCoords& tc);
/// Zero outside [-1,1]^3.
PayloadSample sample_payload(const Payload& payload, const Vec3& local);

struct Primitive {
    Vec3 position;
    Rotation rotation;
    Vec3 scale{1.0, 1.0, 1.0};  // half-extents
    Payload payload;

    /// (R^-1 (x - t)) / s; the box interior is [-1,1]^3.
    Vec3 world_to_local(const Vec3& x) const
    {
        return div(rotation.inverse_rotate(x - position), scale);
    }
    Vec3 local_to_world(const Vec3& local) const
    {
        return rotation.rotate(mul(local, scale)) + position;
    }
    std::array<Vec3, 8> corners() const;

    bool operator==(const Primitive&) const = default;
};

struct PrimitiveSet {
    std::vector<Primitive> primitives;
    Vec3 background;

    std::size_t size() const { return primitives.size(); }
    /// All primitives valid, at least one primitive, uniform payload resolution.
    void validate() const;

    bool operator==(const PrimitiveSet&) const = default;
};

/// Per-primitive offsets from the anchors: translation, axis-angle rotation, scale.
struct DeltaSet {
    std::vector<Vec3> translation;
    std::vector<Vec3> rotation;
    std::vector<Vec3> scale;

    static DeltaSet zeros(std::size_t n);
    std::size_t size() const { return translation.size(); }
};

struct Composition {
    PrimitiveSet scene;
    /// Axes whose composed scale hit kMinScale.
    std::vector<std::array<bool, 3>> scale_clamped;
    bool any_scale_clamped{false};
};

/// t = t_hat + dt; R = R_hat * exp(dr); s = max(s_hat + ds, kMinScale).
Composition compose(const AnchorSet& anchors, const DeltaSet& deltas,
                    std::vector<Payload> payloads, const Vec3& background = {});

/// One primitive's contribution at a world point.
struct PrimitiveContribution {
    Vec3 local;
    TrilinearCoords tri;
    double fade{1.0};
    double alpha_raw{0.0};  // payload density before the fade window
    Vec3 rgb;

    double alpha() const { return alpha_raw * fade; }
};

/// Fills `out` and returns true when x lies inside the primitive's box.
bool evaluate_primitive(const Primitive& prim, const Vec3& x, const FadeParams& fade_params,
                        PrimitiveContribution& out);

/// Composed field: additive fade-weighted density and premultiplied color.
struct FieldSample {
    Vec3 premultiplied;
    double alpha{0.0};
};

FieldSample field_eval(const PrimitiveSet& scene, const Vec3& x, const FadeParams& fade_params);

class SceneError : public std::runtime_error {
public:
    enum class Kind { Io, Version, Corrupt };
    SceneError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr int kSceneFormatVersion = 1;

/// Text header line (JSON) followed by a little-endian float64 payload block, primitive
/// major, rgb then alpha.
void save_scene(const PrimitiveSet& scene, const std::filesystem::path& path);
PrimitiveSet load_scene(const std::filesystem::path& path);

}  // namespace primvol
