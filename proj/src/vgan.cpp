#include "vcgan/vgan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "vcgan/errors.hpp"
#include "vcgan/kernels.hpp"

namespace vcgan {

std::string_view to_string(Objective o) noexcept {
    switch (o) {
    case Objective::Mse: return "mse";
    case Objective::Gan: return "gan";
    case Objective::Wgan: return "wgan";
    }
    return "unknown";
}

std::optional<Objective> parse_objective(std::string_view name) noexcept {
    for (Objective o : {Objective::Mse, Objective::Gan, Objective::Wgan})
        if (to_string(o) == name) return o;
    return std::nullopt;
}

LayerStack GeneratorSpec::build() const {
    if (x_dim == 0 || y_dim == 0 || latent_dim == 0) throw ConfigError("generator dims must be positive");
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, x_dim, 20));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, 20, 20));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, 20, 20));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcLinear, 20, 2 * latent_dim));
    layers.push_back(DenseLayer::sampler(latent_dim));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, latent_dim, 80));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcLinear, 80, y_dim));
    return LayerStack(std::move(layers));
}

LayerStack DiscriminatorSpec::build() const {
    if (x_dim == 0 || y_dim == 0) throw ConfigError("discriminator dims must be positive");
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, x_dim + y_dim, 80));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, 80, 80));
    layers.push_back(DenseLayer::fully_connected(LayerKind::FcRelu, 80, 80));
    layers.push_back(DenseLayer::fully_connected(critic ? LayerKind::FcLinear : LayerKind::FcSigmoid, 80, 1));
    return LayerStack(std::move(layers));
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(disc_learning_rate >= 0.0)) throw ConfigError("train.disc_learning_rate must be >= 0");
    if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
    if (!(wgan_clip > 0.0)) throw ConfigError("train.wgan_clip must be > 0");
    if (n_critic < 1) throw ConfigError("train.n_critic must be >= 1");
    if (latent_dim < 1) throw ConfigError("train.latent_dim must be >= 1");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("train.ema_decay must be in [0, 1)");
}

namespace {

void write_optional(std::ostream& out, std::optional<double> v) {
    if (!v) return;
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), *v);
    out.write(buf, res.ptr - buf);
}

double clamp_prob(double p) noexcept { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_rows(const Matrix& x, const Matrix& other, const char* what) {
    if (x.rows() != other.rows())
        throw ShapeError(std::string(what) + " has " + std::to_string(other.rows()) + " rows, x has " +
                         std::to_string(x.rows()));
}

Matrix score(LayerStack& disc, const Matrix& x, const Matrix& y) { return disc.forward(hconcat(x, y)); }

// Runs the generator, the discriminator on [x | h(x)], and backprops
// d loss / d D through both; returns generator gradients.
ParameterGrads generator_grads_through(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& fake,
                                       const Matrix& d_score) {
    ParameterGrads scratch;
    const Matrix d_in = disc.backward(d_score, scratch);
    const Matrix d_fake = column_slice(d_in, x.cols(), fake.cols());
    ParameterGrads grads;
    gen.backward(d_fake, grads);
    return grads;
}

void require_finite(double loss, const char* what) {
    if (!std::isfinite(loss)) throw NumericError(std::string(what) + " is not finite");
}

} // namespace

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    out << "iteration,d_loss,g_loss,divergence\n";
    for (const auto& r : history.records) {
        out << r.iteration << ',';
        write_optional(out, r.d_loss);
        out << ',';
        write_optional(out, r.g_loss);
        out << ',';
        write_optional(out, r.divergence);
        out << '\n';
    }
}

double mse_loss(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise) {
    check_rows(x, y, "y");
    const Matrix out = gen.forward(x, noise);
    if (out.cols() != y.cols()) throw ShapeError("y width differs from generator output");
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double e = y.data()[i] - out.data()[i];
        loss += e * e;
    }
    return loss / static_cast<double>(x.rows());
}

ObjectiveResult mse_loss_grad(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise) {
    check_rows(x, y, "y");
    const Matrix out = gen.forward(x, noise);
    if (out.cols() != y.cols()) throw ShapeError("y width differs from generator output");
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    Matrix grad(out.rows(), out.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double e = y.data()[i] - out.data()[i];
        loss += e * e;
        grad.data()[i] = -2.0 * e * inv_n;
    }
    ObjectiveResult result{loss * inv_n, {}};
    gen.backward(grad, result.grads);
    return result;
}

double gan_discriminator_loss(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& y_real,
                              const Matrix& noise) {
    check_rows(x, y_real, "y_real");
    const Matrix fake = gen.forward(x, noise);
    const Matrix real_score = score(disc, x, y_real);
    const Matrix fake_score = score(disc, x, fake);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        loss -= std::log(clamp_prob(real_score(i, 0))) + std::log(1.0 - clamp_prob(fake_score(i, 0)));
    return loss / static_cast<double>(x.rows());
}

ObjectiveResult gan_discriminator_loss_grad(LayerStack& gen, LayerStack& disc, const Matrix& x,
                                            const Matrix& y_real, const Matrix& noise) {
    check_rows(x, y_real, "y_real");
    const std::size_t n = x.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Matrix fake = gen.forward(x, noise);
    // Real rows first, then generated rows, in one discriminator pass.
    const Matrix d = disc.forward(vconcat(hconcat(x, y_real), hconcat(x, fake)));
    Matrix grad(2 * n, 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = clamp_prob(d(i, 0));
        loss -= std::log(p);
        grad(i, 0) = -inv_n / p;
        const double q = clamp_prob(d(n + i, 0));
        loss -= std::log(1.0 - q);
        grad(n + i, 0) = inv_n / (1.0 - q);
    }
    ObjectiveResult result{loss * inv_n, {}};
    disc.backward(grad, result.grads);
    return result;
}

double gan_generator_loss(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                          bool non_saturating) {
    const Matrix fake = gen.forward(x, noise);
    const Matrix d = score(disc, x, fake);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double p = clamp_prob(d(i, 0));
        loss += non_saturating ? -std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(x.rows());
}

ObjectiveResult gan_generator_loss_grad(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                                        bool non_saturating) {
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    const Matrix fake = gen.forward(x, noise);
    const Matrix d = score(disc, x, fake);
    Matrix d_score(x.rows(), 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double p = clamp_prob(d(i, 0));
        if (non_saturating) {
            loss -= std::log(p);
            d_score(i, 0) = -inv_n / p;
        } else {
            loss += std::log(1.0 - p);
            d_score(i, 0) = -inv_n / (1.0 - p);
        }
    }
    return {loss * inv_n, generator_grads_through(gen, disc, x, fake, d_score)};
}

double wgan_critic_loss(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                        const Matrix& noise) {
    check_rows(x, y_real, "y_real");
    const Matrix fake = gen.forward(x, noise);
    const Matrix real_score = score(critic, x, y_real);
    const Matrix fake_score = score(critic, x, fake);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) loss += fake_score(i, 0) - real_score(i, 0);
    return loss / static_cast<double>(x.rows());
}

ObjectiveResult wgan_critic_loss_grad(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                                      const Matrix& noise) {
    check_rows(x, y_real, "y_real");
    const std::size_t n = x.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Matrix fake = gen.forward(x, noise);
    const Matrix d = critic.forward(vconcat(hconcat(x, y_real), hconcat(x, fake)));
    Matrix grad(2 * n, 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loss += d(n + i, 0) - d(i, 0);
        grad(i, 0) = -inv_n;
        grad(n + i, 0) = inv_n;
    }
    ObjectiveResult result{loss * inv_n, {}};
    critic.backward(grad, result.grads);
    return result;
}

double wgan_generator_loss(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& noise) {
    const Matrix d = score(critic, x, gen.forward(x, noise));
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) loss -= d(i, 0);
    return loss / static_cast<double>(x.rows());
}

ObjectiveResult wgan_generator_loss_grad(LayerStack& gen, LayerStack& critic, const Matrix& x,
                                         const Matrix& noise) {
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    const Matrix fake = gen.forward(x, noise);
    const Matrix d = score(critic, x, fake);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) loss -= d(i, 0);
    const Matrix d_score(x.rows(), 1, -inv_n);
    return {loss * inv_n, generator_grads_through(gen, critic, x, fake, d_score)};
}

double mse_update(LayerStack& gen, const Matrix& x, const Matrix& y, const Matrix& noise, AdamState& gen_state) {
    auto r = mse_loss_grad(gen, x, y, noise);
    require_finite(r.loss, "mse loss");
    adam_step(gen, r.grads, gen_state);
    return r.loss;
}

double gan_discriminator_update(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& y_real,
                                const Matrix& noise, AdamState& disc_state) {
    auto r = gan_discriminator_loss_grad(gen, disc, x, y_real, noise);
    require_finite(r.loss, "discriminator loss");
    adam_step(disc, r.grads, disc_state);
    return r.loss;
}

double gan_generator_update(LayerStack& gen, LayerStack& disc, const Matrix& x, const Matrix& noise,
                            AdamState& gen_state, bool non_saturating) {
    auto r = gan_generator_loss_grad(gen, disc, x, noise, non_saturating);
    require_finite(r.loss, "generator loss");
    adam_step(gen, r.grads, gen_state);
    return r.loss;
}

double wgan_discriminator_update(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& y_real,
                                 const Matrix& noise, AdamState& critic_state, double clip) {
    auto r = wgan_critic_loss_grad(gen, critic, x, y_real, noise);
    require_finite(r.loss, "critic loss");
    adam_step(critic, r.grads, critic_state);
    const auto& k = kernels::active();
    for (auto block : critic.parameter_blocks()) k.clamp(block.data(), block.size(), -clip, clip);
    return r.loss;
}

double wgan_generator_update(LayerStack& gen, LayerStack& critic, const Matrix& x, const Matrix& noise,
                             AdamState& gen_state) {
    auto r = wgan_generator_loss_grad(gen, critic, x, noise);
    require_finite(r.loss, "generator loss");
    adam_step(gen, r.grads, gen_state);
    return r.loss;
}

Matrix generate(LayerStack& gen, const Matrix& x, Rng& noise_rng) {
    constexpr std::size_t kChunk = 8192;
    Matrix out(x.rows(), gen.out_dim());
    for (std::size_t first = 0; first < x.rows(); first += kChunk) {
        const std::size_t rows = std::min(kChunk, x.rows() - first);
        Matrix chunk(rows, x.cols(),
                     std::vector<double>(x.data() + first * x.cols(), x.data() + (first + rows) * x.cols()));
        Matrix y;
        if (gen.has_sampler()) {
            y = gen.forward(chunk, standard_normal(rows, gen.latent_dim(), noise_rng));
        } else {
            y = gen.forward(chunk);
        }
        std::copy(y.flat().begin(), y.flat().end(), out.data() + first * out.cols());
    }
    gen.clear_cache();
    return out;
}

namespace {

using BatchDraw = std::function<SampleBatch(std::size_t n)>;

TrainResult train_loop(const BatchDraw& draw, std::size_t x_dim, std::size_t y_dim, const TrainConfig& config,
                       const TrainHooks& hooks) {
    TrainResult result;
    result.generator = GeneratorSpec{x_dim, y_dim, config.latent_dim}.build();
    result.generator.init_params(derive_seed(config.seed, 10));
    const bool adversarial = config.objective != Objective::Mse;
    if (adversarial) {
        result.discriminator = DiscriminatorSpec{x_dim, y_dim, config.objective == Objective::Wgan}.build();
        result.discriminator.init_params(derive_seed(config.seed, 11));
    }

    AdamState gen_state(result.generator, AdamConfig{config.learning_rate});
    AdamState disc_state(result.discriminator, AdamConfig{config.disc_learning_rate > 0.0 ? config.disc_learning_rate
                                                                                           : config.learning_rate});

    Rng noise_rng(derive_seed(config.seed, 14));
    auto& gen = result.generator;
    auto& disc = result.discriminator;
    const std::size_t n = config.batch_size;
    const std::size_t latent = config.latent_dim;

    const bool averaging = config.ema_decay > 0.0;
    std::vector<double> average = averaging ? gen.flat_parameters() : std::vector<double>{};
    LayerStack averaged = averaging ? gen : LayerStack{};

    result.history.records.reserve(config.iterations);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        try {
            if (!adversarial) {
                const SampleBatch b = draw(n);
                rec.g_loss = mse_update(gen, b.x, b.y, standard_normal(n, latent, noise_rng), gen_state);
            } else {
                Matrix x;
                double d_loss = 0.0;
                for (std::size_t c = 0; c < config.n_critic; ++c) {
                    SampleBatch b = draw(n);
                    const Matrix noise = standard_normal(n, latent, noise_rng);
                    d_loss = config.objective == Objective::Gan
                                 ? gan_discriminator_update(gen, disc, b.x, b.y, noise, disc_state)
                                 : wgan_discriminator_update(gen, disc, b.x, b.y, noise, disc_state,
                                                             config.wgan_clip);
                    x = std::move(b.x);
                    if (hooks.discriminator_step) hooks.discriminator_step(disc);
                }
                rec.d_loss = d_loss;
                const Matrix noise = standard_normal(n, latent, noise_rng);
                rec.g_loss = config.objective == Objective::Gan
                                 ? gan_generator_update(gen, disc, x, noise, gen_state, config.non_saturating)
                                 : wgan_generator_update(gen, disc, x, noise, gen_state);
            }
        } catch (const NumericError& e) {
            throw TrainingDiverged(it, e.what());
        }
        if (averaging) {
            const double d = config.ema_decay;
            std::size_t i = 0;
            for (auto block : gen.parameter_blocks())
                for (double p : block) {
                    average[i] = d * average[i] + (1.0 - d) * p;
                    ++i;
                }
        }
        if (config.snapshot_every > 0 && hooks.divergence && (it + 1) % config.snapshot_every == 0) {
            if (averaging) {
                averaged.set_flat_parameters(average);
                rec.divergence = hooks.divergence(averaged);
            } else {
                rec.divergence = hooks.divergence(gen);
            }
        }
        if (hooks.progress) hooks.progress(rec);
        result.history.records.push_back(rec);
    }
    if (averaging) gen.set_flat_parameters(average);
    gen.clear_cache();
    disc.clear_cache();
    return result;
}

} // namespace

TrainResult train(const ChannelModel& channel, const SymbolSource& source, const TrainConfig& config,
                  const TrainHooks& hooks) {
    config.validate();
    channel.validate();
    if (source.dim() != channel.dim())
        throw ConfigError(std::string(to_string(source.modulation)) + " symbols do not fit channel " +
                          std::string(to_string(channel.kind)));
    Rng symbol_rng(derive_seed(config.seed, 12));
    Rng channel_rng(derive_seed(config.seed, 13));
    const BatchDraw draw = [&](std::size_t n) {
        SampleBatch b;
        b.x = draw_symbols(source, n, symbol_rng);
        b.y = channel.sample(b.x, channel_rng);
        return b;
    };
    return train_loop(draw, channel.dim(), channel.dim(), config, hooks);
}

TrainResult train_on_dataset(const SampleBatch& data, const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    if (data.size() == 0) throw ConfigError("training dataset is empty");
    if (data.y.rows() != data.size()) throw ShapeError("dataset x and y row counts differ");
    Rng pick_rng(derive_seed(config.seed, 12));
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    const BatchDraw draw = [&](std::size_t n) {
        SampleBatch b{Matrix(n, data.x.cols()), Matrix(n, data.y.cols())};
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t src = pick(pick_rng);
            std::copy(data.x.row(src).begin(), data.x.row(src).end(), b.x.row(r).begin());
            std::copy(data.y.row(src).begin(), data.y.row(src).end(), b.y.row(r).begin());
        }
        return b;
    };
    return train_loop(draw, data.x.cols(), data.y.cols(), config, hooks);
}

} // namespace vcgan
