// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <span>
#include <vector>

namespace primvol {

struct MlpShape {
    int input{1};
    std::vector<int> hidden;  // tanh layers
    int output{1};

    bool operator==(const MlpShape&) const = default;
};

/// Activations kept for the backward pass: acts[0] is the input, acts[i] the output of
/// hidden layer i.
struct MlpTrace {
    std::vector<std::vector<double>> acts;
    const std::vector<double>& last_hidden() const { return acts.back(); }
};

/// Fully-connected network whose weights live at `offset` inside a shared flat parameter
/// vector. Layer l stores a row-major (out x in) weight block followed by its bias.
class Mlp {
public:
    Mlp() = default;
    Mlp(const MlpShape& shape, std::size_t offset);

    const MlpShape& shape() const { return shape_; }
    std::size_t offset() const { return offset_; }
    std::size_t param_count() const { return count_; }
    int layer_count() const { return static_cast<int>(layers_.size()); }

    /// Uniform(-sqrt(6/(in+out)), +) weights, zero biases; the final layer optionally
    /// zeroed, its bias set to `final_bias`.
    void init(std::span<double> params, std::mt19937_64& rng, bool zero_final, double final_bias) const;

    MlpTrace forward_hidden(std::span<const double> params, std::span<const double> input) const;
    /// Final-layer pre-activations for outputs [begin, end) written to out[0 .. end-begin).
    void final_layer(std::span<const double> params, const MlpTrace& trace, std::size_t begin,
                     std::size_t end, double* out) const;
    std::vector<double> forward(std::span<const double> params, std::span<const double> input) const;

    /// Accumulates d params into `dparams` (full flat vector) and returns d input.
    std::vector<double> backward(std::span<const double> params, const MlpTrace& trace,
                                 std::span<const double> d_output_preact, std::span<double> dparams) const;

    /// Product of per-layer Frobenius norms: a Lipschitz bound of the pre-activation
    /// output in the input (tanh is 1-Lipschitz).
    double lipschitz_bound(std::span<const double> params) const;

private:
    struct Layer {
        int in{0};
        int out{0};
        std::size_t weights{0};
        std::size_t bias{0};
    };
    MlpShape shape_;
    std::size_t offset_{0};
    std::size_t count_{0};
    std::vector<Layer> layers_;
};

}  // namespace primvol
