#include "vcgan/layer.hpp"

#include <cmath>
#include <string>

#include "vcgan/errors.hpp"
#include "vcgan/kernels.hpp"

namespace vcgan {

std::string_view to_string(LayerKind kind) noexcept {
    switch (kind) {
    case LayerKind::FcRelu: return "fc_relu";
    case LayerKind::FcLinear: return "fc_linear";
    case LayerKind::FcSigmoid: return "fc_sigmoid";
    case LayerKind::Sampler: return "sampler";
    }
    return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept {
    for (LayerKind k : {LayerKind::FcRelu, LayerKind::FcLinear, LayerKind::FcSigmoid, LayerKind::Sampler})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

DenseLayer DenseLayer::fully_connected(LayerKind kind, std::size_t in_dim, std::size_t out_dim) {
    if (kind == LayerKind::Sampler) throw ConfigError("fully_connected: use DenseLayer::sampler");
    if (in_dim == 0 || out_dim == 0) throw ShapeError("fully_connected: zero dimension");
    return DenseLayer{kind, in_dim, out_dim, Matrix(in_dim, out_dim), Matrix(1, out_dim)};
}

DenseLayer DenseLayer::sampler(std::size_t latent_dim) {
    if (latent_dim == 0) throw ShapeError("sampler: zero latent dimension");
    return DenseLayer{LayerKind::Sampler, 2 * latent_dim, latent_dim, {}, {}};
}

double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix fc_forward(const Matrix& input, const DenseLayer& layer, std::size_t index) {
    if (layer.kind == LayerKind::Sampler) throw ConfigError("fc_forward called on sampler layer " + std::to_string(index));
    if (input.cols() != layer.in_dim || layer.weights.rows() != layer.in_dim ||
        layer.weights.cols() != layer.out_dim || layer.bias.cols() != layer.out_dim) {
        throw ShapeError("layer " + std::to_string(index) + " (" + std::string(to_string(layer.kind)) +
                         "): expected " + std::to_string(layer.in_dim) + " input columns, got " +
                         std::to_string(input.cols()));
    }
    Matrix out(input.rows(), layer.out_dim);
    const auto& k = kernels::active();
    k.gemm_nn_bias(input.data(), layer.weights.data(), layer.bias.data(), out.data(), input.rows(),
                   layer.in_dim, layer.out_dim);
    switch (layer.kind) {
    case LayerKind::FcRelu: k.relu(out.data(), out.size()); break;
    case LayerKind::FcSigmoid:
        for (double& v : out.flat()) v = sigmoid(v);
        break;
    default: break;
    }
    return out;
}

Matrix sampler_forward(const Matrix& pre, const Matrix& epsilon) {
    if (pre.cols() != 2 * epsilon.cols() || pre.rows() != epsilon.rows()) {
        throw ShapeError("sampler: pre is " + std::to_string(pre.rows()) + "x" + std::to_string(pre.cols()) +
                         ", noise is " + std::to_string(epsilon.rows()) + "x" + std::to_string(epsilon.cols()));
    }
    Matrix z(pre.rows(), epsilon.cols());
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        for (std::size_t j = 0; j < z.cols(); ++j)
            z(r, j) = pre(r, 2 * j) + softplus(pre(r, 2 * j + 1)) * epsilon(r, j);
    }
    return z;
}

} // namespace vcgan
