// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/optim.h"

#include <cmath>
#include <string>

#include "primvol/error.h"

namespace primvol {

Adam::Adam(std::size_t size, const AdamConfig& config) : config_(config), m_(size, 0.0), v_(size, 0.0)
{
    if (!(config.lr >= 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0))
        throw ArgumentError("invalid Adam configuration");
}

void Adam::step(std::span<double> params, std::span<const double> grads)
{
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ArgumentError("Adam state holds " + std::to_string(m_.size()) + " values, got " +
                            std::to_string(params.size()) + " params and " + std::to_string(grads.size()) +
                            " grads");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double step = config_.lr * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
        params[i] -= step * m_[i] / (std::sqrt(v_[i]) + config_.eps * std::sqrt(c2));
    }
}

}  // namespace primvol
