#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vcgan/layer_stack.hpp"

namespace vcgan {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring a parameter set block by block.
struct AdamState {
    AdamState(const LayerStack& stack, AdamConfig config);
    AdamState(std::size_t parameter_count, AdamConfig config);

    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update. Throws NumericError if a parameter leaves
/// the finite range.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state);
void adam_step(LayerStack& stack, const ParameterGrads& grads, AdamState& state);
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

} // namespace vcgan
