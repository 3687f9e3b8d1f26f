#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "vcgan/adam.hpp"
#include "vcgan/channels.hpp"
#include "vcgan/layer_stack.hpp"
#include "vcgan/modulation.hpp"

namespace vcgan {

enum class Objective { Mse, Gan, Wgan };

std::string_view to_string(Objective o) noexcept;
std::optional<Objective> parse_objective(std::string_view name) noexcept;

/// Conditional generator h(x): three 20-wide ReLU layers, a linear layer
/// producing interleaved (mean, scale) pairs, the Gaussian sampler, an 80-wide
/// ReLU layer and a linear output layer.
struct GeneratorSpec {
    std::size_t x_dim = 1;
    std::size_t y_dim = 1;
    std::size_t latent_dim = 16;

    LayerStack build() const;
};

/// Discriminator D(x, y) on the concatenation [x | y]: three 80-wide ReLU
/// layers and a single-unit head, sigmoid for GAN or linear for the WGAN critic.
struct DiscriminatorSpec {
    std::size_t x_dim = 1;
    std::size_t y_dim = 1;
    bool critic = false;

    LayerStack build() const;
};

struct TrainConfig {
    Objective objective = Objective::Gan;
    double learning_rate = 2e-4;
    double disc_learning_rate = 0.0;  // 0: same as learning_rate
    std::size_t batch_size = 256;
    std::size_t iterations = 10000;
    std::uint64_t seed = 1;
    double wgan_clip = 0.01;
    bool non_saturating = true;
    std::size_t n_critic = 1;  // discriminator steps per generator step
    std::size_t latent_dim = 16;
    std::size_t snapshot_every = 0;  // 0 disables divergence snapshots
    /// Exponential moving average of generator weights; the averaged weights
    /// are what train() returns and what snapshots see. 0 keeps the raw weights.
    double ema_decay = 0.0;

    void validate() const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::optional<double> d_loss;  // absent in MSE mode
    double g_loss = 0.0;
    std::optional<double> divergence;
};

struct TrainHistory {
    std::vector<IterationRecord> records;
};

/// CSV with header iteration,d_loss,g_loss,divergence; absent values are empty.
void write_history_csv(std::ostream& out, const TrainHistory& history);

/// Loss value (the quantity that is descended) and its parameter gradients.
struct ObjectiveResult {
    double loss = 0.0;
    ParameterGrads grads;
};

// D outputs are clamped into [kProbClamp, 1 - kProbClamp] before taking logs.
inline constexpr double kProbClamp = 1e-7;

/// mean over rows of ||y - h(x)||^2.
double mse_loss(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise);
ObjectiveResult mse_loss_grad(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise);

/// -(1/N) sum [log D(x, y_real) + log(1 - D(x, h(x)))]; gradients w.r.t. D only.
double gan_discriminator_loss(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& y_real,
                              const Matrix& noise);
ObjectiveResult gan_discriminator_loss_grad(LayerStack& gen, LayerStack& disc, const Matrix& x,
                                            const Matrix& y_real, const Matrix& noise);

/// Non-saturating: -(1/N) sum log D(x, h(x)). Literal: (1/N) sum log(1 - D(x, h(x))).
/// Gradients w.r.t. h only.
double gan_generator_loss(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                          bool non_saturating);
ObjectiveResult gan_generator_loss_grad(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                                        bool non_saturating);

/// -(1/N) sum [D(x, y_real) - D(x, h(x))]; gradients w.r.t. the critic only.
double wgan_critic_loss(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                        const Matrix& noise);
ObjectiveResult wgan_critic_loss_grad(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                                      const Matrix& noise);

/// -(1/N) sum D(x, h(x)); gradients w.r.t. h only.
double wgan_generator_loss(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& noise);
ObjectiveResult wgan_generator_loss_grad(LayerStack& gen, LayerStack& critic, const Matrix& x,
                                         const Matrix& noise);

// One optimizer step on one network. Each returns the pre-step loss.
double mse_update(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise, AdamState& gen_state);
double gan_discriminator_update(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& y_real,
                                const Matrix& noise, AdamState& disc_state);
double gan_generator_update(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                            AdamState& gen_state, bool non_saturating = true);
/// Adam step, then every critic parameter is clamped to [-clip, clip].
double wgan_discriminator_update(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                                 const Matrix& noise, AdamState& critic_state, double clip);
double wgan_generator_update(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& noise,
                             AdamState& gen_state);

/// Draws fresh sampler noise and runs the generator in fixed-size chunks.
Matrix generate(LayerStack& gen, const Matrix& x, Rng& noise_rng);

struct TrainHooks {
    /// Called every `snapshot_every` iterations; the value lands in the history.
    std::function<double(LayerStack& gen)> divergence;
    std::function<void(const IterationRecord&)> progress;
    /// Runs after every discriminator/critic update.
    std::function<void(const LayerStack& disc)> discriminator_step;
};

struct TrainResult {
    LayerStack generator;
    LayerStack discriminator;  // empty in MSE mode
    TrainHistory history;
};

/// Alternating training: per iteration, n_critic discriminator steps on fresh
/// (x, channel(x), noise) batches followed by one generator step; MSE mode
/// takes a single regression step. Deterministic in config.seed.
TrainResult train(const ChannelModel& channel, const SymbolSource& source, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Same loop, drawing minibatches uniformly with replacement from measured
/// (x, y) pairs instead of simulating a channel.
TrainResult train_on_dataset(const SampleBatch& data, const TrainConfig& config, const TrainHooks& hooks = {});

} // namespace vcgan
