#pragma once

#include <functional>

#include "vcgan/layer_stack.hpp"

namespace vcgan {

inline constexpr double kFiniteDiffStep = 1e-5;

/// Central differences (f(theta + h) - f(theta - h)) / 2h of an arbitrary
/// objective, perturbing each parameter of `stack` in turn. The objective may
/// read other networks; only `stack` is perturbed, and every parameter is
/// restored bit-exactly afterwards.
ParameterGrads finite_diff_grad(LayerStack& stack, const std::function<double()>& objective,
                                double step = kFiniteDiffStep);

/// Same, for loss = scalar_loss(stack.forward(input, noise)).
ParameterGrads finite_diff_grad(LayerStack& stack, const Matrix& input, const Matrix* noise,
                                const std::function<double(const Matrix&)>& scalar_loss,
                                double step = kFiniteDiffStep);

} // namespace vcgan
