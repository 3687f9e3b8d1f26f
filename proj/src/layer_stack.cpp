#include "vcgan/layer_stack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "vcgan/errors.hpp"
#include "vcgan/kernels.hpp"
#include "vcgan/rng.hpp"

namespace vcgan {

std::vector<double> ParameterGrads::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& b : blocks) out.insert(out.end(), b.flat().begin(), b.flat().end());
    return out;
}

std::size_t ParameterGrads::size() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
}

LayerStack::LayerStack(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    validate();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].kind != LayerKind::Sampler) continue;
        if (has_sampler()) throw ConfigError("layer stack holds more than one sampler");
        sampler_index_ = i;
    }
}

void LayerStack::validate() const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const std::string where = "layer " + std::to_string(i);
        if (l.kind == LayerKind::Sampler) {
            if (l.in_dim != 2 * l.out_dim || !l.weights.empty() || !l.bias.empty())
                throw ShapeError(where + ": sampler needs in_dim = 2 * out_dim and no parameters");
        } else if (l.weights.rows() != l.in_dim || l.weights.cols() != l.out_dim || l.bias.rows() != 1 ||
                   l.bias.cols() != l.out_dim) {
            throw ShapeError(where + ": parameter shapes disagree with declared dims");
        }
        if (i + 1 < layers_.size() && l.out_dim != layers_[i + 1].in_dim) {
            throw ShapeError(where + " outputs " + std::to_string(l.out_dim) + " but layer " +
                             std::to_string(i + 1) + " expects " + std::to_string(layers_[i + 1].in_dim));
        }
    }
}

std::size_t LayerStack::latent_dim() const noexcept {
    return has_sampler() ? layers_[sampler_index_].out_dim : 0;
}

Matrix LayerStack::forward(const Matrix& input, const Matrix* noise) {
    if (has_sampler() && noise == nullptr) throw ConfigError("stack has a sampler layer but no noise was supplied");
    if (!has_sampler() && noise != nullptr) throw ConfigError("noise supplied to a stack without a sampler layer");
    if (noise != nullptr && (noise->cols() != latent_dim() || noise->rows() != input.rows())) {
        throw ShapeError("noise must be " + std::to_string(input.rows()) + "x" + std::to_string(latent_dim()));
    }
    cached_ = false;
    activations_.resize(layers_.size() + 1);
    activations_[0] = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        if (layer.kind == LayerKind::Sampler) {
            if (activations_[i].cols() != layer.in_dim)
                throw ShapeError("layer " + std::to_string(i) + " (sampler): input width mismatch");
            activations_[i + 1] = sampler_forward(activations_[i], *noise);
        } else {
            activations_[i + 1] = fc_forward(activations_[i], layer, i);
        }
    }
    if (noise != nullptr) noise_ = *noise;
    cached_ = true;
    return activations_.back();
}

Matrix LayerStack::backward(const Matrix& output_grad, ParameterGrads& grads) {
    if (!cached_) throw StateError("backward called before forward");
    const Matrix& out = activations_.back();
    if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
        throw ShapeError("output gradient shape does not match the last forward output");
    if (grads.blocks.size() != 2 * (layers_.size() - (has_sampler() ? 1 : 0))) grads = zero_grads();

    const auto& k = kernels::active();
    Matrix delta = output_grad;
    std::size_t block = grads.blocks.size();
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const auto& layer = layers_[i];
        const Matrix& in = activations_[i];
        const Matrix& act = activations_[i + 1];
        const std::size_t m = in.rows();

        if (layer.kind == LayerKind::Sampler) {
            Matrix d_pre(m, layer.in_dim);
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t j = 0; j < layer.out_dim; ++j) {
                    const double g = delta(r, j);
                    d_pre(r, 2 * j) = g;
                    d_pre(r, 2 * j + 1) = g * sigmoid(in(r, 2 * j + 1)) * noise_(r, j);
                }
            }
            delta = std::move(d_pre);
            continue;
        }

        // delta becomes d loss / d pre-activation
        switch (layer.kind) {
        case LayerKind::FcRelu: k.relu_backward(act.data(), delta.data(), delta.size()); break;
        case LayerKind::FcSigmoid:
            for (std::size_t e = 0; e < delta.size(); ++e) {
                const double s = act.data()[e];
                delta.data()[e] *= s * (1.0 - s);
            }
            break;
        default: break;
        }

        Matrix& d_bias = grads.blocks[--block];
        Matrix& d_weights = grads.blocks[--block];
        d_weights = Matrix(layer.in_dim, layer.out_dim);
        d_bias = Matrix(1, layer.out_dim);
        k.gemm_tn(in.data(), delta.data(), d_weights.data(), m, layer.in_dim, layer.out_dim);
        k.column_sum(delta.data(), d_bias.data(), m, layer.out_dim);

        Matrix d_in(m, layer.in_dim);
        k.gemm_nt(delta.data(), layer.weights.data(), d_in.data(), m, layer.in_dim, layer.out_dim);
        delta = std::move(d_in);
    }
    return delta;
}

void LayerStack::init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& layer : layers_) {
        if (!layer.has_parameters()) continue;
        const double fan_in = static_cast<double>(layer.in_dim);
        const double std_dev = layer.kind == LayerKind::FcRelu ? std::sqrt(2.0 / fan_in) : std::sqrt(1.0 / fan_in);
        std::normal_distribution<double> normal(0.0, std_dev);
        for (double& w : layer.weights.flat()) w = normal(rng);
        layer.bias.fill(0.0);
    }
    clear_cache();
}

std::vector<std::span<double>> LayerStack::parameter_blocks() {
    std::vector<std::span<double>> out;
    for (auto& layer : layers_) {
        if (!layer.has_parameters()) continue;
        out.push_back(layer.weights.flat());
        out.push_back(layer.bias.flat());
    }
    return out;
}

std::vector<std::span<const double>> LayerStack::parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& layer : layers_) {
        if (!layer.has_parameters()) continue;
        out.push_back(layer.weights.flat());
        out.push_back(layer.bias.flat());
    }
    return out;
}

std::size_t LayerStack::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

std::vector<double> LayerStack::flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (auto block : parameter_blocks()) out.insert(out.end(), block.begin(), block.end());
    return out;
}

void LayerStack::set_flat_parameters(std::span<const double> values) {
    if (values.size() != parameter_count()) throw ShapeError("set_flat_parameters: wrong parameter count");
    std::size_t offset = 0;
    for (auto block : parameter_blocks()) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), block.size(), block.begin());
        offset += block.size();
    }
    clear_cache();
}

ParameterGrads LayerStack::zero_grads() const {
    ParameterGrads g;
    for (const auto& layer : layers_) {
        if (!layer.has_parameters()) continue;
        g.blocks.emplace_back(layer.in_dim, layer.out_dim);
        g.blocks.emplace_back(1, layer.out_dim);
    }
    return g;
}

void LayerStack::clear_cache() noexcept {
    cached_ = false;
    activations_.clear();
}

} // namespace vcgan
