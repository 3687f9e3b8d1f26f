#include "vcgan/adam.hpp"

#include <algorithm>
#include <cmath>

#include "vcgan/errors.hpp"
#include "vcgan/kernels.hpp"

namespace vcgan {

AdamState::AdamState(const LayerStack& stack, AdamConfig cfg) : config(cfg) {
    for (auto block : stack.parameter_blocks()) {
        m.emplace_back(block.size(), 0.0);
        v.emplace_back(block.size(), 0.0);
    }
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig cfg)
    : config(cfg), m{std::vector<double>(parameter_count, 0.0)}, v{std::vector<double>(parameter_count, 0.0)} {}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: block count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size() || params[b].size() != state.m[b].size())
            throw ShapeError("adam_step: block " + std::to_string(b) + " size mismatch");
    }

    ++state.step;
    const auto t = static_cast<double>(state.step);
    const kernels::AdamCoeffs coeffs{state.config.learning_rate,
                                     state.config.beta1,
                                     state.config.beta2,
                                     state.config.epsilon,
                                     1.0 - std::pow(state.config.beta1, t),
                                     1.0 - std::pow(state.config.beta2, t)};
    const auto& k = kernels::active();
    for (std::size_t b = 0; b < params.size(); ++b) {
        k.adam_update(params[b].data(), grads[b].data(), state.m[b].data(), state.v[b].data(), params[b].size(),
                      coeffs);
        if (!std::all_of(params[b].begin(), params[b].end(), [](double x) { return std::isfinite(x); }))
            throw NumericError("adam_step produced a non-finite parameter");
    }
}

void adam_step(LayerStack& stack, const ParameterGrads& grads, AdamState& state) {
    auto params = stack.parameter_blocks();
    std::vector<std::span<const double>> g;
    g.reserve(grads.blocks.size());
    for (const auto& block : grads.blocks) g.push_back(block.flat());
    adam_step(params, g, state);
    stack.clear_cache();
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    const std::span<double> p[1] = {params};
    const std::span<const double> g[1] = {grads};
    adam_step(p, g, state);
}

} // namespace vcgan
