#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "vcgan/matrix.hpp"

namespace vcgan {

enum class LayerKind {
    FcRelu,     // max(0, xW + b)
    FcLinear,   // xW + b
    FcSigmoid,  // 1 / (1 + exp(-(xW + b)))
    Sampler,    // z_j = mu_j + softplus(s_j) * eps_j, inputs interleaved (mu_0, s_0, mu_1, s_1, ...)
};

std::string_view to_string(LayerKind kind) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept;

/// One layer of a LayerStack. Weights are in_dim x out_dim, bias is 1 x out_dim.
/// Sampler layers carry no parameters and have in_dim == 2 * out_dim.
struct DenseLayer {
    LayerKind kind = LayerKind::FcLinear;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Matrix weights;
    Matrix bias;

    static DenseLayer fully_connected(LayerKind kind, std::size_t in_dim, std::size_t out_dim);
    static DenseLayer sampler(std::size_t latent_dim);

    bool has_parameters() const noexcept { return kind != LayerKind::Sampler; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Affine map plus activation for a single fully connected layer.
/// `index` only labels the shape error message.
Matrix fc_forward(const Matrix& input, const DenseLayer& layer, std::size_t index = 0);

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

/// Reparameterized Gaussian draw. `pre` has 2L columns interleaving the mean and
/// the scale pre-activation; `epsilon` has L columns of standard normal noise.
Matrix sampler_forward(const Matrix& pre, const Matrix& epsilon);

} // namespace vcgan
