// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "primvol/image.h"

namespace primvol {

/// Scalar-output differentiable image critic.
class Critic {
public:
    virtual ~Critic() = default;

    virtual double forward(const ImageBuffer& x) const = 0;
    /// dD/dx.
    virtual ImageBuffer input_grad(const ImageBuffer& x) const = 0;
    /// Adds scale * dD/dtheta to grad.
    virtual void param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const = 0;
    /// Adds scale * d ||dD/dx||^2 / dtheta to grad.
    virtual void r1_param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const = 0;

    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& params() const = 0;

    /// ||dD/dx||^2.
    double r1_penalty(const ImageBuffer& x) const;
};

/// D(x) = <k, x> + b.
class LinearCritic : public Critic {
public:
    LinearCritic(int width, int height, int channels, std::uint64_t seed, double init_scale = 0.01);

    double forward(const ImageBuffer& x) const override;
    ImageBuffer input_grad(const ImageBuffer& x) const override;
    void param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const override;
    void r1_param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const override;
    std::vector<double>& params() override { return params_; }
    const std::vector<double>& params() const override { return params_; }

private:
    int width_, height_, channels_;
    std::vector<double> params_;  // k then b
};

/// Two 3x3 stride-2 convolutions (zero padding 1) with softplus activations and a linear
/// head. R1 parameter gradients are obtained by differentiating the input-gradient pass.
class ConvCritic : public Critic {
public:
    ConvCritic(int width, int height, int channels, int c1, int c2, std::uint64_t seed);

    double forward(const ImageBuffer& x) const override;
    ImageBuffer input_grad(const ImageBuffer& x) const override;
    void param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const override;
    void r1_param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const override;
    std::vector<double>& params() override { return params_; }
    const std::vector<double>& params() const override { return params_; }

    struct Conv {
        int in_c, out_c, in_w, in_h, out_w, out_h;
        std::size_t weights, bias;  // offsets; weights are [out][in][3][3]
    };

private:
    struct Activations;
    Activations run(const ImageBuffer& x) const;

    int width_, height_, channels_;
    Conv conv1_, conv2_;
    std::size_t head_{0};  // offset of the head weights; bias follows
    std::vector<double> params_;
};

}  // namespace primvol
