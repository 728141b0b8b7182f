// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace primvol {

struct AdamConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

/// Adam with bias correction.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, const AdamConfig& config);

    void step(std::span<double> params, std::span<const double> grads);

    const AdamConfig& config() const { return config_; }
    void set_lr(double lr) { config_.lr = lr; }
    std::int64_t steps() const { return t_; }
    std::size_t size() const { return m_.size(); }

    // Moment access for checkpointing.
    std::vector<double>& first_moment() { return m_; }
    std::vector<double>& second_moment() { return v_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    void set_steps(std::int64_t t) { t_ = t; }

private:
    AdamConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::int64_t t_{0};
};

}  // namespace primvol
