// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "primvol/critic.h"
#include "primvol/dataset.h"
#include "primvol/generator.h"
#include "primvol/guidemesh.h"
#include "primvol/loss.h"
#include "primvol/optim.h"
#include "primvol/render.h"

namespace primvol {

/// Anchors on a regular n^3 lattice filling [-extent, extent]^3, identity frames, half-extent
/// (extent / n) * (1 + overlap).
AnchorSet lattice_anchors(int per_axis, double extent, double overlap = 0.2);

struct LogEntry {
    int step{0};
    double total{0.0};
    double rec{0.0};
    double perc{0.0};
    double adv{0.0};
    double vol{0.0};
    double critic{0.0};  // discriminator term, adversarial runs only
    double wall_seconds{0.0};

    nlohmann::json to_json() const;
};

using LogCallback = std::function<void(const LogEntry&)>;

/// Opacity fade exponent over training. Constant unless `anneal` is set, in which case it
/// moves from start_exponent toward the render exponent at rate lambda_fade per step.
struct FadeSchedule {
    bool anneal{false};
    double start_exponent{2.0};

    double exponent_at(int step, double final_exponent, double lambda_fade) const;
};

struct FitConfig {
    int iters{2000};
    double lr{1e-3};  // placement deltas
    double lr_rgb{2e-2};
    double lr_alpha{5e-2};
    int payload_resolution{8};
    double init_alpha{0.5};
    Vec3 init_rgb{0.5, 0.5, 0.5};
    LossWeights weights;
    FadeSchedule fade_schedule;
    RenderOptions render;
    std::uint64_t seed{42};
    int log_every{1};

    void validate() const;
};

struct FitResult {
    PrimitiveSet scene;
    DeltaSet deltas;
    std::vector<LogEntry> log;  // every log_every steps, plus the last step
};

/// Optimizes payloads and placement deltas of one primitive per anchor against the views
/// of a single scene, one view per Adam step. Throws DivergenceError on a non-finite loss
/// or gradient.
FitResult fit_scene(const MultiViewDataset& views, const AnchorSet& anchors, const FitConfig& config,
                    const LogCallback& on_log = {});

/// Unit view direction fed to the rgb network for a camera.
Vec3 view_direction(const Camera& camera);

/// Image and gradients of one generator forward and render pass.
struct GeneratorStep {
    GeneratedScene generated;
    ImageBuffer image;
    TotalLoss loss;
    GeneratorGrads grads;
};

GeneratorStep generator_step(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                             const Camera& camera, const ImageBuffer& target, const LossWeights& weights,
                             const RenderOptions& render, const Critic* critic = nullptr);

/// Render of the generator at latent w.
ImageBuffer render_generator(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                             const Camera& camera, const RenderOptions& render, const Vec3& background = {});

struct DistillConfig {
    int iters{2000};
    int batch{8};
    double lr{1e-3};
    double critic_lr{1e-5};
    int critic_channels{4};
    LossWeights weights;
    FadeSchedule fade_schedule;
    RenderOptions render;
    std::uint64_t seed{42};
    int log_every{1};
    std::optional<std::filesystem::path> checkpoint;
    int checkpoint_every{100};

    void validate() const;
};

struct DistillResult {
    Generator generator;
    std::vector<LogEntry> log;
    int steps_run{0};
    bool resumed{false};
};

/// Trains the generator on (latent, camera, image) records. Step s draws its minibatch
/// from a generator seeded by (seed, s), so a resumed run matches an uninterrupted one
/// bitwise. When config.checkpoint names an existing file, training resumes from it.
/// stop_after limits the steps run in this call (0: no limit).
DistillResult distill(const MultiViewDataset& dataset, const AnchorSet& anchors, const Generator& init,
                      const DistillConfig& config, const LogCallback& on_log = {}, int stop_after = 0);

struct InvertConfig {
    int latent_iters{1200};
    int joint_iters{800};
    double lr_latent{1e-2};
    double lr_params{1e-3};
    LossWeights weights;
    RenderOptions render;
    std::optional<std::vector<double>> init_latent;  // default: zeros
    int log_every{1};

    void validate() const;
};

struct InvertResult {
    std::vector<double> latent;
    Generator generator;
    double best_loss{0.0};
    int best_step{0};
    std::vector<LogEntry> log;
};

/// Fits the latent code alone, then the latent code and generator together, keeping the
/// lowest-loss state seen.
InvertResult invert_image(const ImageBuffer& target, const Camera& camera, const Generator& gen,
                          const AnchorSet& anchors, const InvertConfig& config, const LogCallback& on_log = {});

}  // namespace primvol
