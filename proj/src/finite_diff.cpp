#include "vcgan/finite_diff.hpp"

#include <cmath>

#include "vcgan/errors.hpp"

namespace vcgan {

ParameterGrads finite_diff_grad(LayerStack& stack, const std::function<double()>& objective, double step) {
    ParameterGrads grads = stack.zero_grads();
    auto blocks = stack.parameter_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto out = grads.blocks[b].flat();
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            double& p = blocks[b][i];
            const double saved = p;
            p = saved + step;
            const double plus = objective();
            p = saved - step;
            const double minus = objective();
            p = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus))
                throw NumericError("finite_diff_grad: objective is not finite");
            out[i] = (plus - minus) / (2.0 * step);
        }
    }
    stack.clear_cache();
    return grads;
}

ParameterGrads finite_diff_grad(LayerStack& stack, const Matrix& input, const Matrix* noise,
                                const std::function<double(const Matrix&)>& scalar_loss, double step) {
    return finite_diff_grad(stack, [&] { return scalar_loss(stack.forward(input, noise)); }, step);
}

} // namespace vcgan
