#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vcgan/channels.hpp"
#include "vcgan/layer_stack.hpp"
#include "vcgan/matrix.hpp"
#include "vcgan/modulation.hpp"

namespace vcgan {

struct HistogramRange {
    double lo = -6.0;
    double hi = 6.0;
};

/// Binned probability mass over a 1-D or 2-D sample space. 2-D mass is stored
/// row-major: bin (i, j) lives at i * bins(1) + j.
struct DensityEstimate {
    std::vector<std::vector<double>> edges;  // per dimension, bins + 1 strictly increasing values
    std::vector<double> mass;
    std::size_t sample_count = 0;
    std::size_t clipped_count = 0;  // samples outside the range, folded into edge bins

    std::size_t dims() const noexcept { return edges.size(); }
    std::size_t bins(std::size_t dim) const noexcept { return edges[dim].size() - 1; }
    double center(std::size_t dim, std::size_t bin) const noexcept {
        return 0.5 * (edges[dim][bin] + edges[dim][bin + 1]);
    }
    bool same_binning(const DensityEstimate& other) const noexcept { return edges == other.edges; }
};

/// Normalized histogram of the rows of `samples` (1 or 2 columns), `bins` per
/// dimension, the same range for every dimension. Out-of-range samples are
/// clipped into the edge bins and counted.
DensityEstimate histogram(const Matrix& samples, std::size_t bins, HistogramRange range);

/// KL(p || q) in nats. q is floored at kKlFloor and renormalized first.
inline constexpr double kKlFloor = 1e-10;
double kl_divergence(const DensityEstimate& p, const DensityEstimate& q);

/// Bins where p has mass but q has none (the ones the KL floor papers over).
std::size_t empty_support_bins(const DensityEstimate& p, const DensityEstimate& q);

/// Jensen-Shannon divergence in nats, within [0, log 2], exactly symmetric.
double js_divergence(const DensityEstimate& p, const DensityEstimate& q);

/// Earth mover's distance between two 1-D empirical distributions. Sizes may
/// differ; both are then resampled at max(na, nb) mid-point quantiles.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

/// Uniform mixture of per-condition densities sharing one binning.
DensityEstimate marginal_density(std::span<const DensityEstimate> per_condition);

struct ConditionMoments {
    std::vector<double> x;
    std::size_t count = 0;
    std::vector<double> mean;
    Matrix covariance;  // population covariance, dims x dims
    std::vector<double> skewness;

    double std_dev(std::size_t dim) const;
};

struct ConditionalMoments {
    std::vector<ConditionMoments> groups;
    std::size_t omitted_rows = 0;        // x not among the supplied conditions
    std::size_t empty_conditions = 0;    // supplied conditions with no rows
};

/// Groups rows by exact x value (sorted lexicographically) and computes moments of y.
ConditionalMoments conditional_moments(const SampleBatch& batch);

/// Groups against the given conditions (one per row of `conditions`), in that order.
ConditionalMoments conditional_moments(const SampleBatch& batch, const Matrix& conditions);

/// Spread of a 2-D cluster along (radial) and across (tangential) the
/// direction of its mean.
struct PolarSpread {
    double radial_std = 0.0;
    double tangential_std = 0.0;
};
PolarSpread polar_spread(const ConditionMoments& group);

struct EvalConfig {
    std::size_t samples = 100000;
    std::size_t bins = 100;
    HistogramRange range{-6.0, 6.0};
    std::uint64_t seed = 0;
};

/// Draws y for a batch of x; the ground-truth channel or a trained generator.
using ConditionalSampler = std::function<Matrix(const Matrix& x, Rng& rng)>;

struct ConditionReport {
    std::vector<double> x;
    ConditionMoments truth;
    ConditionMoments model;
    double js = 0.0;
    double kl = 0.0;
    std::vector<double> w1;  // per output dimension
    PolarSpread truth_spread;  // 2-D only
    PolarSpread model_spread;
    DensityEstimate truth_density;
    DensityEstimate model_density;
};

struct ModelReport {
    Modulation modulation = Modulation::Bpsk;
    ChannelModel channel;
    std::size_t dims = 1;
    EvalConfig eval;
    std::vector<ConditionReport> conditions;
    DensityEstimate marginal_truth;
    DensityEstimate marginal_model;
    double marginal_js = 0.0;
    double marginal_kl = 0.0;
    std::size_t marginal_empty_model_bins = 0;
    std::vector<double> marginal_w1;  // per output dimension
    double mean_condition_js = 0.0;
};

/// Draws matched sample sets from the channel and from `model` on the same x,
/// then compares them per condition and marginally.
ModelReport compare_model(const ConditionalSampler& model, const ChannelModel& channel, const SymbolSource& source,
                          const EvalConfig& config);
ModelReport compare_model(LayerStack& generator, const ChannelModel& channel, const SymbolSource& source,
                          const EvalConfig& config);

/// 1-D: bin_center,mass. 2-D long format: bin_x,bin_y,mass.
void write_density_csv(std::ostream& out, const DensityEstimate& density);

std::string report_to_json(const ModelReport& report, const std::string& experiment, const std::string& objective);

} // namespace vcgan
