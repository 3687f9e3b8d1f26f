#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vcgan/layer.hpp"
#include "vcgan/matrix.hpp"

namespace vcgan {

/// Gradients (or any per-parameter quantity) shaped like a stack's parameters:
/// one block per weight matrix and one per bias row, in layer order.
struct ParameterGrads {
    std::vector<Matrix> blocks;

    std::vector<double> flatten() const;
    std::size_t size() const noexcept;
};

/// Ordered chain of dense layers with cached activations for backprop.
class LayerStack {
public:
    LayerStack() = default;
    explicit LayerStack(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t in_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim; }
    std::size_t out_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim; }

    bool has_sampler() const noexcept { return sampler_index_ < layers_.size(); }
    /// Latent width of the sampler layer (0 if none).
    std::size_t latent_dim() const noexcept;

    /// Runs every layer in order and caches activations. `noise` must be given
    /// exactly when the stack holds a sampler, with one row per input row.
    Matrix forward(const Matrix& input, const Matrix* noise = nullptr);
    Matrix forward(const Matrix& input, const Matrix& noise) { return forward(input, &noise); }

    /// Backprop of `output_grad` (d loss / d output of the last forward call).
    /// Writes parameter gradients into `grads` and returns d loss / d input.
    Matrix backward(const Matrix& output_grad, ParameterGrads& grads);

    /// He-scaled Gaussian weights for ReLU layers, Xavier-scaled for linear and
    /// sigmoid layers, zero biases. Bit-identical for a given seed.
    void init_params(std::uint64_t seed);

    std::vector<std::span<double>> parameter_blocks();
    std::vector<std::span<const double>> parameter_blocks() const;
    std::size_t parameter_count() const noexcept;
    std::vector<double> flat_parameters() const;
    void set_flat_parameters(std::span<const double> values);

    ParameterGrads zero_grads() const;

    /// Drops cached activations; the next backward requires a new forward.
    void clear_cache() noexcept;

private:
    void validate() const;

    std::vector<DenseLayer> layers_;
    std::size_t sampler_index_ = static_cast<std::size_t>(-1);
    std::vector<Matrix> activations_;  // activations_[0] = input, [i+1] = output of layer i
    Matrix noise_;
    bool cached_ = false;
};

} // namespace vcgan
