// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/mlp.h"

#include <cmath>

#include "primvol/error.h"

namespace primvol {

Mlp::Mlp(const MlpShape& shape, std::size_t offset) : shape_(shape), offset_(offset)
{
    if (shape.input < 1 || shape.output < 1) throw ArgumentError("network widths must be >= 1");
    int in = shape.input;
    std::size_t cursor = offset;
    auto add = [&](int out) {
        if (out < 1) throw ArgumentError("network widths must be >= 1");
        Layer l;
        l.in = in;
        l.out = out;
        l.weights = cursor;
        cursor += static_cast<std::size_t>(in) * out;
        l.bias = cursor;
        cursor += out;
        layers_.push_back(l);
        in = out;
    };
    for (int h : shape.hidden) add(h);
    add(shape.output);
    count_ = cursor - offset;
}

void Mlp::init(std::span<double> params, std::mt19937_64& rng, bool zero_final, double final_bias) const
{
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        const bool last = li + 1 == layers_.size();
        const double limit = std::sqrt(6.0 / (l.in + l.out));
        std::uniform_real_distribution<double> u(-limit, limit);
        const std::size_t n = static_cast<std::size_t>(l.in) * l.out;
        for (std::size_t i = 0; i < n; ++i) params[l.weights + i] = (last && zero_final) ? 0.0 : u(rng);
        for (int i = 0; i < l.out; ++i) params[l.bias + i] = last ? final_bias : 0.0;
    }
}

MlpTrace Mlp::forward_hidden(std::span<const double> params, std::span<const double> input) const
{
    if (static_cast<int>(input.size()) != shape_.input)
        throw ArgumentError("network input has " + std::to_string(input.size()) + " values, expected " +
                            std::to_string(shape_.input));
    MlpTrace t;
    t.acts.emplace_back(input.begin(), input.end());
    for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        const std::vector<double>& x = t.acts.back();
        std::vector<double> y(l.out);
        for (int o = 0; o < l.out; ++o) {
            const double* w = &params[l.weights + static_cast<std::size_t>(o) * l.in];
            double s = params[l.bias + o];
            for (int i = 0; i < l.in; ++i) s += w[i] * x[i];
            y[o] = std::tanh(s);
        }
        t.acts.push_back(std::move(y));
    }
    return t;
}

void Mlp::final_layer(std::span<const double> params, const MlpTrace& trace, std::size_t begin,
                      std::size_t end, double* out) const
{
    const Layer& l = layers_.back();
    const std::vector<double>& x = trace.last_hidden();
    for (std::size_t o = begin; o < end; ++o) {
        const double* w = &params[l.weights + o * l.in];
        double s = params[l.bias + o];
        for (int i = 0; i < l.in; ++i) s += w[i] * x[i];
        out[o - begin] = s;
    }
}

std::vector<double> Mlp::forward(std::span<const double> params, std::span<const double> input) const
{
    const MlpTrace t = forward_hidden(params, input);
    std::vector<double> out(shape_.output);
    final_layer(params, t, 0, out.size(), out.data());
    return out;
}

std::vector<double> Mlp::backward(std::span<const double> params, const MlpTrace& trace,
                                  std::span<const double> d_output_preact, std::span<double> dparams) const
{
    std::vector<double> delta(d_output_preact.begin(), d_output_preact.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        const std::vector<double>& x = trace.acts[li];
        std::vector<double> dx(l.in, 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const std::size_t row = l.weights + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) {
                dparams[row + i] += d * x[i];
                dx[i] += d * params[row + i];
            }
            dparams[l.bias + o] += d;
        }
        if (li > 0) {
            // x = tanh(pre): d pre = d x * (1 - x^2)
            for (int i = 0; i < l.in; ++i) dx[i] *= 1.0 - x[i] * x[i];
        }
        delta = std::move(dx);
    }
    return delta;
}

double Mlp::lipschitz_bound(std::span<const double> params) const
{
    double bound = 1.0;
    for (const Layer& l : layers_) {
        double f = 0.0;
        const std::size_t n = static_cast<std::size_t>(l.in) * l.out;
        for (std::size_t i = 0; i < n; ++i) f += params[l.weights + i] * params[l.weights + i];
        bound *= std::sqrt(f);
    }
    return bound;
}

}  // namespace primvol
