// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "primvol/critic.h"
#include "primvol/image.h"
#include "primvol/scene.h"

namespace primvol {

struct LossWeights {
    double lambda_perc{20.0};
    double lambda_reg{1e-4};
    double lambda_fade{1e-2};
    double lambda_vol{1e-2};
    bool adversarial{false};
    int perc_levels{4};

    /// Throws ArgumentError when a weight is negative or perc_levels < 1.
    void validate() const;
    nlohmann::json to_json() const;
};

struct ImageLoss {
    double value{0.0};
    ImageBuffer grad;  // d value / d rendered
};

/// Mean absolute error; subgradient 0 at exact ties.
ImageLoss loss_rec(const ImageBuffer& rendered, const ImageBuffer& target);

/// -log(1 + exp(-u)), stable for any u.
double f_logistic(double u);
/// d/du f_logistic(u) = 1 / (1 + exp(u)).
double f_logistic_derivative(double u);

/// Gaussian pyramid: level 0 is the image; each further level is a separable
/// [1 4 6 4 1]/16 blur (edge clamped) followed by taking every second pixel.
std::vector<ImageBuffer> gaussian_pyramid(const ImageBuffer& image, int levels);

/// Mean over pyramid levels of the per-level L1. Stand-in for a learned perceptual metric.
ImageLoss loss_perc_proxy(const ImageBuffer& rendered, const ImageBuffer& target, int levels);

struct VolumePrior {
    double value{0.0};
    std::vector<Vec3> scale_grad;
};

/// Sum over primitives of s_x s_y s_z.
VolumePrior prior_volume(const PrimitiveSet& scene);

struct DiscLoss {
    double generator_term{0.0};      // f(D(rendered))
    double discriminator_term{0.0};  // f(-D(real)) + f(D(rendered))
    double r1{0.0};                  // ||dD/dx (real)||^2
    ImageBuffer rendered_grad;       // d generator_term / d rendered
};

/// The critic is trained to maximize discriminator_term - lambda_reg * r1; the generator
/// minimizes generator_term.
DiscLoss loss_disc(const Critic& critic, const ImageBuffer& rendered, const ImageBuffer& real);

/// Adds the gradient of the critic objective to minimize,
/// -(f(-D(real)) + f(D(rendered))) + lambda_reg * r1, to grad.
void critic_objective_grad(const Critic& critic, const ImageBuffer& rendered, const ImageBuffer& real,
                           double lambda_reg, std::vector<double>& grad);

struct TotalLoss {
    double total{0.0};
    double rec{0.0};
    double perc{0.0};
    double adv{0.0};
    double vol{0.0};
    ImageBuffer image_grad;
    std::vector<Vec3> scale_grad;
};

/// rec + [generator_term] + lambda_perc * perc + lambda_vol * prior_volume.
TotalLoss total_loss(const ImageBuffer& rendered, const ImageBuffer& target, const PrimitiveSet& scene,
                     const LossWeights& weights, const Critic* critic = nullptr);

}  // namespace primvol
