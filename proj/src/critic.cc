// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/critic.h"

#include <cmath>
#include <random>

#include "primvol/error.h"

namespace primvol {

double Critic::r1_penalty(const ImageBuffer& x) const
{
    const ImageBuffer g = input_grad(x);
    double s = 0.0;
    for (double v : g.data()) s += v * v;
    return s;
}

namespace {

void check_shape(const ImageBuffer& x, int w, int h, int c)
{
    if (x.width() != w || x.height() != h || x.channels() != c)
        throw ArgumentError("critic input must be " + std::to_string(w) + "x" + std::to_string(h) + "x" +
                            std::to_string(c));
}

double softplus(double z) { return z > 30.0 ? z : (z < -30.0 ? std::exp(z) : std::log1p(std::exp(z))); }

double sigmoid(double z)
{
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

using Tensor = std::vector<double>;  // [channel][y][x]

Tensor to_tensor(const ImageBuffer& img)
{
    const int w = img.width(), h = img.height(), c = img.channels();
    Tensor t(static_cast<std::size_t>(w) * h * c);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) t[(static_cast<std::size_t>(ch) * h + y) * w + x] = img.at(x, y, ch);
    return t;
}

ImageBuffer to_image(const Tensor& t, int w, int h, int c)
{
    ImageBuffer img(w, h, c);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) img.at(x, y, ch) = t[(static_cast<std::size_t>(ch) * h + y) * w + x];
    return img;
}

// out = W * in (+ bias when with_bias).
Tensor conv_forward(const ConvCritic::Conv& c, const std::vector<double>& p, const Tensor& in, bool with_bias)
{
    Tensor out(static_cast<std::size_t>(c.out_c) * c.out_h * c.out_w, 0.0);
    for (int o = 0; o < c.out_c; ++o)
        for (int oy = 0; oy < c.out_h; ++oy)
            for (int ox = 0; ox < c.out_w; ++ox) {
                double s = with_bias ? p[c.bias + o] : 0.0;
                for (int i = 0; i < c.in_c; ++i)
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * oy + ky - 1;
                        if (y < 0 || y >= c.in_h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * ox + kx - 1;
                            if (x < 0 || x >= c.in_w) continue;
                            s += p[c.weights + ((static_cast<std::size_t>(o) * c.in_c + i) * 3 + ky) * 3 + kx] *
                                 in[(static_cast<std::size_t>(i) * c.in_h + y) * c.in_w + x];
                        }
                    }
                out[(static_cast<std::size_t>(o) * c.out_h + oy) * c.out_w + ox] = s;
            }
    return out;
}

// W^T * g: adjoint of conv_forward in its input.
Tensor conv_transpose(const ConvCritic::Conv& c, const std::vector<double>& p, const Tensor& g)
{
    Tensor out(static_cast<std::size_t>(c.in_c) * c.in_h * c.in_w, 0.0);
    for (int o = 0; o < c.out_c; ++o)
        for (int oy = 0; oy < c.out_h; ++oy)
            for (int ox = 0; ox < c.out_w; ++ox) {
                const double d = g[(static_cast<std::size_t>(o) * c.out_h + oy) * c.out_w + ox];
                if (d == 0.0) continue;
                for (int i = 0; i < c.in_c; ++i)
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * oy + ky - 1;
                        if (y < 0 || y >= c.in_h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * ox + kx - 1;
                            if (x < 0 || x >= c.in_w) continue;
                            out[(static_cast<std::size_t>(i) * c.in_h + y) * c.in_w + x] +=
                                d * p[c.weights + ((static_cast<std::size_t>(o) * c.in_c + i) * 3 + ky) * 3 + kx];
                        }
                    }
            }
    return out;
}

// grad[W] += scale * sum_p g[o,p] in[i, s(p,q)]; grad[b] += scale * sum_p g when with_bias.
void conv_weight_grad(const ConvCritic::Conv& c, const Tensor& in, const Tensor& g, double scale,
                      std::vector<double>& grad, bool with_bias)
{
    for (int o = 0; o < c.out_c; ++o)
        for (int oy = 0; oy < c.out_h; ++oy)
            for (int ox = 0; ox < c.out_w; ++ox) {
                const double d = scale * g[(static_cast<std::size_t>(o) * c.out_h + oy) * c.out_w + ox];
                if (d == 0.0) continue;
                if (with_bias) grad[c.bias + o] += d;
                for (int i = 0; i < c.in_c; ++i)
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * oy + ky - 1;
                        if (y < 0 || y >= c.in_h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * ox + kx - 1;
                            if (x < 0 || x >= c.in_w) continue;
                            grad[c.weights + ((static_cast<std::size_t>(o) * c.in_c + i) * 3 + ky) * 3 + kx] +=
                                d * in[(static_cast<std::size_t>(i) * c.in_h + y) * c.in_w + x];
                        }
                    }
            }
}

ConvCritic::Conv make_conv(int in_c, int out_c, int in_w, int in_h, std::size_t& cursor)
{
    ConvCritic::Conv c{in_c, out_c, in_w, in_h, (in_w + 1) / 2, (in_h + 1) / 2, 0, 0};
    c.weights = cursor;
    cursor += static_cast<std::size_t>(out_c) * in_c * 9;
    c.bias = cursor;
    cursor += out_c;
    return c;
}

}  // namespace

LinearCritic::LinearCritic(int width, int height, int channels, std::uint64_t seed, double init_scale)
    : width_(width), height_(height), channels_(channels)
{
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    params_.resize(n + 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, init_scale);
    for (std::size_t i = 0; i < n; ++i) params_[i] = dist(rng);
    params_[n] = 0.0;
}

double LinearCritic::forward(const ImageBuffer& x) const
{
    check_shape(x, width_, height_, channels_);
    double s = params_.back();
    const auto d = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) s += params_[i] * d[i];
    return s;
}

ImageBuffer LinearCritic::input_grad(const ImageBuffer& x) const
{
    check_shape(x, width_, height_, channels_);
    ImageBuffer g(width_, height_, channels_);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = params_[i];
    return g;
}

void LinearCritic::param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const
{
    check_shape(x, width_, height_, channels_);
    const auto d = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) grad[i] += scale * d[i];
    grad.back() += scale;
}

void LinearCritic::r1_param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const
{
    check_shape(x, width_, height_, channels_);
    for (std::size_t i = 0; i + 1 < params_.size(); ++i) grad[i] += scale * 2.0 * params_[i];
}

struct ConvCritic::Activations {
    Tensor x, z1, a1, z2, a2;
};

ConvCritic::ConvCritic(int width, int height, int channels, int c1, int c2, std::uint64_t seed)
    : width_(width), height_(height), channels_(channels)
{
    if (c1 < 1 || c2 < 1 || width < 1 || height < 1) throw ArgumentError("invalid critic shape");
    std::size_t cursor = 0;
    conv1_ = make_conv(channels, c1, width, height, cursor);
    conv2_ = make_conv(c1, c2, conv1_.out_w, conv1_.out_h, cursor);
    head_ = cursor;
    cursor += static_cast<std::size_t>(c2) * conv2_.out_w * conv2_.out_h + 1;
    params_.assign(cursor, 0.0);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t first, std::size_t count, double fan_in) {
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(fan_in));
        for (std::size_t i = 0; i < count; ++i) params_[first + i] = dist(rng);
    };
    fill(conv1_.weights, static_cast<std::size_t>(c1) * channels * 9, 9.0 * channels);
    fill(conv2_.weights, static_cast<std::size_t>(c2) * c1 * 9, 9.0 * c1);
    const std::size_t head_n = params_.size() - 1 - head_;
    fill(head_, head_n, static_cast<double>(head_n));
}

ConvCritic::Activations ConvCritic::run(const ImageBuffer& x) const
{
    check_shape(x, width_, height_, channels_);
    Activations a;
    a.x = to_tensor(x);
    a.z1 = conv_forward(conv1_, params_, a.x, true);
    a.a1.resize(a.z1.size());
    for (std::size_t i = 0; i < a.z1.size(); ++i) a.a1[i] = softplus(a.z1[i]);
    a.z2 = conv_forward(conv2_, params_, a.a1, true);
    a.a2.resize(a.z2.size());
    for (std::size_t i = 0; i < a.z2.size(); ++i) a.a2[i] = softplus(a.z2[i]);
    return a;
}

double ConvCritic::forward(const ImageBuffer& x) const
{
    const Activations a = run(x);
    double s = params_.back();
    for (std::size_t i = 0; i < a.a2.size(); ++i) s += params_[head_ + i] * a.a2[i];
    return s;
}

ImageBuffer ConvCritic::input_grad(const ImageBuffer& x) const
{
    const Activations a = run(x);
    Tensor g2(a.z2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = params_[head_ + i] * sigmoid(a.z2[i]);
    Tensor g1 = conv_transpose(conv2_, params_, g2);
    for (std::size_t i = 0; i < g1.size(); ++i) g1[i] *= sigmoid(a.z1[i]);
    return to_image(conv_transpose(conv1_, params_, g1), width_, height_, channels_);
}

void ConvCritic::param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const
{
    const Activations a = run(x);
    for (std::size_t i = 0; i < a.a2.size(); ++i) grad[head_ + i] += scale * a.a2[i];
    grad.back() += scale;
    Tensor g2(a.z2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = params_[head_ + i] * sigmoid(a.z2[i]);
    conv_weight_grad(conv2_, a.a1, g2, scale, grad, true);
    Tensor g1 = conv_transpose(conv2_, params_, g2);
    for (std::size_t i = 0; i < g1.size(); ++i) g1[i] *= sigmoid(a.z1[i]);
    conv_weight_grad(conv1_, a.x, g1, scale, grad, true);
}

void ConvCritic::r1_param_grad(const ImageBuffer& x, double scale, std::vector<double>& grad) const
{
    // Input-gradient pass: g2 = v . s(z2); ga1 = W2^T g2; g1 = ga1 . s(z1); gx = W1^T g1.
    const Activations a = run(x);
    const std::size_t n2 = a.z2.size(), n1 = a.z1.size();
    Tensor s2(n2), s1(n1), g2(n2);
    for (std::size_t i = 0; i < n2; ++i) {
        s2[i] = sigmoid(a.z2[i]);
        g2[i] = params_[head_ + i] * s2[i];
    }
    const Tensor ga1 = conv_transpose(conv2_, params_, g2);
    Tensor g1(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        s1[i] = sigmoid(a.z1[i]);
        g1[i] = ga1[i] * s1[i];
    }
    const Tensor gx = conv_transpose(conv1_, params_, g1);

    // Reverse through it with R = ||gx||^2.
    Tensor gx_bar(gx.size());
    for (std::size_t i = 0; i < gx.size(); ++i) gx_bar[i] = 2.0 * gx[i];
    conv_weight_grad(conv1_, gx_bar, g1, scale, grad, false);
    const Tensor g1_bar = conv_forward(conv1_, params_, gx_bar, false);
    Tensor ga1_bar(n1), z1_bar(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        ga1_bar[i] = g1_bar[i] * s1[i];
        z1_bar[i] = g1_bar[i] * ga1[i] * s1[i] * (1.0 - s1[i]);
    }
    conv_weight_grad(conv2_, ga1_bar, g2, scale, grad, false);
    const Tensor g2_bar = conv_forward(conv2_, params_, ga1_bar, false);
    Tensor z2_bar(n2);
    for (std::size_t i = 0; i < n2; ++i) {
        grad[head_ + i] += scale * g2_bar[i] * s2[i];
        z2_bar[i] = g2_bar[i] * params_[head_ + i] * s2[i] * (1.0 - s2[i]);
    }
    // z2 = W2 a1 + b2; a1 = softplus(z1); z1 = W1 x + b1.
    conv_weight_grad(conv2_, a.a1, z2_bar, scale, grad, true);
    const Tensor a1_bar = conv_transpose(conv2_, params_, z2_bar);
    for (std::size_t i = 0; i < n1; ++i) z1_bar[i] += a1_bar[i] * s1[i];
    conv_weight_grad(conv1_, a.x, z1_bar, scale, grad, true);
}

}  // namespace primvol
