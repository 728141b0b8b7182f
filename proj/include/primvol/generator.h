// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "primvol/autodiff.h"
#include "primvol/guidemesh.h"
#include "primvol/mlp.h"
#include "primvol/optim.h"
#include "primvol/scene.h"

namespace primvol {

struct GeneratorConfig {
    int latent_dim{512};
    int n_prim{1024};
    int resolution{kDefaultPayloadResolution};
    std::vector<int> geo_hidden{64, 64};
    std::vector<int> alpha_hidden{64};
    std::vector<int> rgb_hidden{64};
    // Output scaling: delta = range * tanh(raw).
    double range_t{0.1};
    double range_r{0.5};
    double range_s{0.05};
    /// Initial payload density (softplus of the alpha bias).
    double alpha_init{1.0};
    std::uint64_t seed{42};

    /// Throws ArgumentError on non-positive sizes or ranges, or range_r >= pi.
    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
    bool operator==(const GeneratorConfig&) const = default;
};

/// Three latent-conditioned networks sharing one flat parameter vector:
/// geo: w -> 9 per primitive (k*9 + {dt, dr, ds}); alpha: w -> M^3 per primitive
/// (k*M^3 + cell); rgb: (w, view_dir) -> 3 M^3 per primitive ((k*M^3 + cell)*3 + c).
class Generator {
public:
    Generator() = default;
    /// Random hidden layers, zero geo output layer.
    explicit Generator(const GeneratorConfig& config);

    const GeneratorConfig& config() const { return config_; }
    const Mlp& geo() const { return geo_; }
    const Mlp& alpha() const { return alpha_; }
    const Mlp& rgb() const { return rgb_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    bool operator==(const Generator& o) const { return config_ == o.config_ && params_ == o.params_; }

private:
    GeneratorConfig config_;
    Mlp geo_;
    Mlp alpha_;
    Mlp rgb_;
    std::vector<double> params_;
};

DeltaSet geo_forward(const Generator& gen, std::span<const double> w);
/// Per-primitive alpha grids (softplus outputs), each M^3.
std::vector<std::vector<double>> alpha_forward(const Generator& gen, std::span<const double> w);
/// Per-primitive interleaved rgb grids (sigmoid outputs), each 3 M^3. view_dir must be unit.
std::vector<std::vector<double>> rgb_forward(const Generator& gen, std::span<const double> w,
                                             const Vec3& view_dir);

/// Scene plus everything the generator backward pass needs.
struct GeneratedScene {
    Composition composition;
    DeltaSet deltas;
    std::vector<double> latent;
    Vec3 view_dir;
    MlpTrace geo_trace;
    MlpTrace alpha_trace;
    MlpTrace rgb_trace;

    const PrimitiveSet& scene() const { return composition.scene; }
};

/// compose(anchors, geo_forward, payloads from alpha_forward and rgb_forward). The final
/// payload layers are evaluated straight into the payload arrays.
GeneratedScene generate_scene(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                              const Vec3& view_dir, const Vec3& background = {});

struct GeneratorGrads {
    std::vector<double> params;
    std::vector<double> latent;
};

/// Pulls scene gradients back to the generator parameters and the latent code. Scale
/// axes clamped at the floor pass no gradient; rotation tangents go through the right
/// Jacobian of the exponential map.
GeneratorGrads generator_backward(const Generator& gen, const GeneratedScene& generated,
                                  const SceneGrads& scene_grads);

/// Lipschitz bound of the geo deltas in w (max range times the Frobenius product).
double geo_lipschitz_bound(const Generator& gen);

struct GeneratorCheckpoint {
    Generator generator;
    std::int64_t step{0};
    std::vector<double> adam_m;  // empty when no optimizer state is stored
    std::vector<double> adam_v;
    std::int64_t adam_steps{0};
    nlohmann::json extra;
};

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON header line followed by little-endian float64 blocks: params, then Adam moments.
void save_checkpoint(const GeneratorCheckpoint& ckpt, const std::filesystem::path& path);
GeneratorCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace primvol
