// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/loss.h"

#include <cmath>

#include "primvol/error.h"

namespace primvol {

void LossWeights::validate() const
{
    if (!(lambda_perc >= 0.0) || !(lambda_reg >= 0.0) || !(lambda_fade >= 0.0) || !(lambda_vol >= 0.0))
        throw ArgumentError("loss weights must be non-negative");
    if (perc_levels < 1) throw ArgumentError("perceptual proxy needs at least one level");
}

nlohmann::json LossWeights::to_json() const
{
    return {{"lambda_perc", lambda_perc}, {"lambda_reg", lambda_reg}, {"lambda_fade", lambda_fade},
            {"lambda_vol", lambda_vol},   {"adversarial", adversarial}, {"perc_levels", perc_levels}};
}

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b)
{
    if (!a.same_shape(b)) throw ArgumentError("image shapes differ");
}

constexpr double kBlur[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// One pyramid step and its adjoint. Output is ceil(w/2) x ceil(h/2).
ImageBuffer blur_down(const ImageBuffer& in)
{
    const int w = in.width(), h = in.height(), c = in.channels();
    ImageBuffer tmp(w, h, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) s += kBlur[k + 2] * in.at(std::clamp(x + k, 0, w - 1), y, ch);
                tmp.at(x, y, ch) = s;
            }
    ImageBuffer out((w + 1) / 2, (h + 1) / 2, c);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            for (int ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) s += kBlur[k + 2] * tmp.at(2 * x, std::clamp(2 * y + k, 0, h - 1), ch);
                out.at(x, y, ch) = s;
            }
    return out;
}

ImageBuffer blur_down_adjoint(const ImageBuffer& g, int w, int h)
{
    const int c = g.channels();
    ImageBuffer tmp(w, h, c);
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            for (int ch = 0; ch < c; ++ch)
                for (int k = -2; k <= 2; ++k)
                    tmp.at(2 * x, std::clamp(2 * y + k, 0, h - 1), ch) += kBlur[k + 2] * g.at(x, y, ch);
    ImageBuffer out(w, h, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const double v = tmp.at(x, y, ch);
                if (v == 0.0) continue;
                for (int k = -2; k <= 2; ++k) out.at(std::clamp(x + k, 0, w - 1), y, ch) += kBlur[k + 2] * v;
            }
    return out;
}

}  // namespace

ImageLoss loss_rec(const ImageBuffer& rendered, const ImageBuffer& target)
{
    require_same_shape(rendered, target);
    ImageLoss out;
    out.grad = ImageBuffer(rendered.width(), rendered.height(), rendered.channels());
    const auto r = rendered.data();
    const auto t = target.data();
    const double inv = 1.0 / static_cast<double>(r.size());
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r[i] - t[i];
        s += std::abs(d);
        out.grad.data()[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    out.value = s * inv;
    return out;
}

double f_logistic(double u)
{
    // -log(1 + e^-u) = -softplus(-u)
    if (u > 30.0) return -std::exp(-u);
    if (u < -30.0) return u - std::exp(u);
    if (u >= 0.0) return -std::log1p(std::exp(-u));
    return u - std::log1p(std::exp(u));
}

double f_logistic_derivative(double u)
{
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

std::vector<ImageBuffer> gaussian_pyramid(const ImageBuffer& image, int levels)
{
    if (levels < 1) throw ArgumentError("pyramid needs at least one level");
    std::vector<ImageBuffer> p{image};
    for (int l = 1; l < levels; ++l) p.push_back(blur_down(p.back()));
    return p;
}

ImageLoss loss_perc_proxy(const ImageBuffer& rendered, const ImageBuffer& target, int levels)
{
    require_same_shape(rendered, target);
    const std::vector<ImageBuffer> pr = gaussian_pyramid(rendered, levels);
    const std::vector<ImageBuffer> pt = gaussian_pyramid(target, levels);
    ImageLoss out;
    std::vector<ImageBuffer> level_grads(levels);
    for (int l = 0; l < levels; ++l) {
        ImageLoss li = loss_rec(pr[l], pt[l]);
        out.value += li.value / levels;
        for (double& g : li.grad.data()) g /= levels;
        level_grads[l] = std::move(li.grad);
    }
    // Pull coarse-level gradients down to full resolution.
    for (int l = levels - 1; l > 0; --l) {
        const ImageBuffer down = blur_down_adjoint(level_grads[l], pr[l - 1].width(), pr[l - 1].height());
        for (std::size_t i = 0; i < down.size(); ++i) level_grads[l - 1].data()[i] += down.data()[i];
    }
    out.grad = std::move(level_grads[0]);
    return out;
}

VolumePrior prior_volume(const PrimitiveSet& scene)
{
    VolumePrior v;
    v.scale_grad.reserve(scene.size());
    for (const Primitive& p : scene.primitives) {
        const Vec3& s = p.scale;
        v.value += s.x * s.y * s.z;
        v.scale_grad.push_back({s.y * s.z, s.x * s.z, s.x * s.y});
    }
    return v;
}

DiscLoss loss_disc(const Critic& critic, const ImageBuffer& rendered, const ImageBuffer& real)
{
    require_same_shape(rendered, real);
    DiscLoss out;
    const double d_fake = critic.forward(rendered);
    const double d_real = critic.forward(real);
    out.generator_term = f_logistic(d_fake);
    out.discriminator_term = f_logistic(-d_real) + f_logistic(d_fake);
    out.r1 = critic.r1_penalty(real);
    out.rendered_grad = critic.input_grad(rendered);
    const double df = f_logistic_derivative(d_fake);
    for (double& g : out.rendered_grad.data()) g *= df;
    return out;
}

void critic_objective_grad(const Critic& critic, const ImageBuffer& rendered, const ImageBuffer& real,
                           double lambda_reg, std::vector<double>& grad)
{
    require_same_shape(rendered, real);
    const double d_fake = critic.forward(rendered);
    const double d_real = critic.forward(real);
    // d/dtheta of -f(-D(real)) = f'(-D(real)) dD(real); of -f(D(fake)) = -f'(D(fake)) dD(fake).
    critic.param_grad(real, f_logistic_derivative(-d_real), grad);
    critic.param_grad(rendered, -f_logistic_derivative(d_fake), grad);
    if (lambda_reg > 0.0) critic.r1_param_grad(real, lambda_reg, grad);
}

TotalLoss total_loss(const ImageBuffer& rendered, const ImageBuffer& target, const PrimitiveSet& scene,
                     const LossWeights& weights, const Critic* critic)
{
    weights.validate();
    TotalLoss out;
    ImageLoss rec = loss_rec(rendered, target);
    out.rec = rec.value;
    out.image_grad = std::move(rec.grad);
    out.total = out.rec;
    if (weights.lambda_perc > 0.0) {
        const ImageLoss perc = loss_perc_proxy(rendered, target, weights.perc_levels);
        out.perc = perc.value;
        out.total += weights.lambda_perc * perc.value;
        for (std::size_t i = 0; i < out.image_grad.size(); ++i)
            out.image_grad.data()[i] += weights.lambda_perc * perc.grad.data()[i];
    }
    if (weights.adversarial) {
        if (!critic) throw ArgumentError("adversarial loss enabled without a critic");
        const DiscLoss d = loss_disc(*critic, rendered, target);
        out.adv = d.generator_term;
        out.total += d.generator_term;
        for (std::size_t i = 0; i < out.image_grad.size(); ++i)
            out.image_grad.data()[i] += d.rendered_grad.data()[i];
    }
    out.scale_grad.assign(scene.size(), Vec3{});
    if (weights.lambda_vol > 0.0) {
        const VolumePrior v = prior_volume(scene);
        out.vol = v.value;
        out.total += weights.lambda_vol * v.value;
        for (std::size_t k = 0; k < scene.size(); ++k) out.scale_grad[k] = v.scale_grad[k] * weights.lambda_vol;
    }
    return out;
}

}  // namespace primvol
