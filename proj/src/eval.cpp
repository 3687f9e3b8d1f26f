#include "vcgan/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "vcgan/errors.hpp"
#include "vcgan/vgan.hpp"

namespace vcgan {
namespace {

std::size_t bin_index(double v, const std::vector<double>& edges, bool& clipped) {
    const std::size_t bins = edges.size() - 1;
    const double lo = edges.front(), hi = edges.back();
    if (!(v >= lo)) {
        clipped = true;
        return 0;
    }
    if (!(v < hi)) {
        clipped = clipped || v > hi;
        return bins - 1;
    }
    auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(idx, bins - 1);
}

void require_same_binning(const DensityEstimate& p, const DensityEstimate& q) {
    if (!p.same_binning(q) || p.mass.size() != q.mass.size())
        throw ShapeError("densities do not share a binning");
}

// Per-bin terms of the skewed KL divergences to the midpoint; symmetric in (p, q).
double js_term(double p, double q) {
    const double m = 0.5 * (p + q);
    const double tp = p > 0.0 ? p * std::log(p / m) : 0.0;
    const double tq = q > 0.0 ? q * std::log(q / m) : 0.0;
    return 0.5 * (tp + tq);
}

std::vector<double> sorted_quantiles(std::vector<double> sorted, std::size_t n) {
    if (sorted.size() == n) return sorted;
    std::vector<double> out(n);
    const double len = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = (static_cast<double>(i) + 0.5) / static_cast<double>(n) * len - 0.5;
        if (pos <= 0.0) {
            out[i] = sorted.front();
        } else if (pos >= len - 1.0) {
            out[i] = sorted.back();
        } else {
            const auto lo = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(lo);
            out[i] = sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
        }
    }
    return out;
}

ConditionMoments moments_of(std::vector<double> x, const std::vector<std::size_t>& rows, const Matrix& y) {
    ConditionMoments g;
    g.x = std::move(x);
    g.count = rows.size();
    const std::size_t d = y.cols();
    g.mean.assign(d, 0.0);
    g.covariance = Matrix(d, d);
    g.skewness.assign(d, 0.0);
    if (rows.empty()) return g;
    const double n = static_cast<double>(rows.size());
    // shifted by the first sample so constant groups give exactly zero spread
    std::vector<double> pivot(d), shifted(d, 0.0);
    for (std::size_t a = 0; a < d; ++a) pivot[a] = y(rows.front(), a);
    for (std::size_t r : rows)
        for (std::size_t a = 0; a < d; ++a) shifted[a] += y(r, a) - pivot[a];
    for (std::size_t a = 0; a < d; ++a) {
        shifted[a] /= n;
        g.mean[a] = pivot[a] + shifted[a];
    }
    std::vector<double> third(d, 0.0);
    for (std::size_t r : rows) {
        for (std::size_t a = 0; a < d; ++a) {
            const double da = (y(r, a) - pivot[a]) - shifted[a];
            third[a] += da * da * da;
            for (std::size_t b = 0; b < d; ++b) g.covariance(a, b) += da * ((y(r, b) - pivot[b]) - shifted[b]);
        }
    }
    for (double& c : g.covariance.flat()) c /= n;
    for (std::size_t a = 0; a < d; ++a) {
        const double var = g.covariance(a, a);
        g.skewness[a] = var > 0.0 ? (third[a] / n) / std::pow(var, 1.5) : 0.0;
    }
    return g;
}

} // namespace

DensityEstimate histogram(const Matrix& samples, std::size_t bins, HistogramRange range) {
    if (samples.rows() == 0) throw ConfigError("histogram of an empty sample set");
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    if (!(range.hi > range.lo)) throw ConfigError("histogram range must have hi > lo");
    if (samples.cols() < 1 || samples.cols() > 2) throw ShapeError("histogram supports 1 or 2 dimensions");

    DensityEstimate h;
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = range.lo + (range.hi - range.lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.edges.assign(samples.cols(), edges);
    h.mass.assign(samples.cols() == 1 ? bins : bins * bins, 0.0);
    h.sample_count = samples.rows();

    std::vector<std::size_t> counts(h.mass.size(), 0);
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        bool clipped = false;
        std::size_t idx = bin_index(samples(r, 0), edges, clipped);
        if (samples.cols() == 2) idx = idx * bins + bin_index(samples(r, 1), edges, clipped);
        ++counts[idx];
        if (clipped) ++h.clipped_count;
    }
    const double n = static_cast<double>(samples.rows());
    for (std::size_t i = 0; i < counts.size(); ++i) h.mass[i] = static_cast<double>(counts[i]) / n;
    return h;
}

double kl_divergence(const DensityEstimate& p, const DensityEstimate& q) {
    require_same_binning(p, q);
    double q_total = 0.0;
    for (double v : q.mass) q_total += std::max(v, kKlFloor);
    double kl = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        if (p.mass[i] <= 0.0) continue;
        const double qi = std::max(q.mass[i], kKlFloor) / q_total;
        kl += p.mass[i] * std::log(p.mass[i] / qi);
    }
    return std::max(kl, 0.0);
}

std::size_t empty_support_bins(const DensityEstimate& p, const DensityEstimate& q) {
    require_same_binning(p, q);
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.mass.size(); ++i)
        if (p.mass[i] > 0.0 && q.mass[i] <= 0.0) ++n;
    return n;
}

double js_divergence(const DensityEstimate& p, const DensityEstimate& q) {
    require_same_binning(p, q);
    double js = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) js += js_term(p.mass[i], q.mass[i]);
    return std::clamp(js, 0.0, std::log(2.0));
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ConfigError("wasserstein1_1d of an empty sample set");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const std::size_t n = std::max(sa.size(), sb.size());
    const auto qa = sorted_quantiles(std::move(sa), n);
    const auto qb = sorted_quantiles(std::move(sb), n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::abs(qa[i] - qb[i]);
    return total / static_cast<double>(n);
}

DensityEstimate marginal_density(std::span<const DensityEstimate> per_condition) {
    if (per_condition.empty()) throw ConfigError("marginal_density of no conditions");
    DensityEstimate out = per_condition.front();
    out.mass.assign(out.mass.size(), 0.0);
    out.sample_count = 0;
    out.clipped_count = 0;
    const double w = 1.0 / static_cast<double>(per_condition.size());
    for (const auto& c : per_condition) {
        require_same_binning(out, c);
        for (std::size_t i = 0; i < c.mass.size(); ++i) out.mass[i] += w * c.mass[i];
        out.sample_count += c.sample_count;
        out.clipped_count += c.clipped_count;
    }
    const double total = std::accumulate(out.mass.begin(), out.mass.end(), 0.0);
    if (total > 0.0)
        for (double& m : out.mass) m /= total;
    return out;
}

double ConditionMoments::std_dev(std::size_t dim) const { return std::sqrt(std::max(covariance(dim, dim), 0.0)); }

ConditionalMoments conditional_moments(const SampleBatch& batch) {
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto xr = batch.x.row(r);
        groups[std::vector<double>(xr.begin(), xr.end())].push_back(r);
    }
    ConditionalMoments out;
    for (auto& [x, rows] : groups) out.groups.push_back(moments_of(x, rows, batch.y));
    return out;
}

ConditionalMoments conditional_moments(const SampleBatch& batch, const Matrix& conditions) {
    if (conditions.cols() != batch.x.cols()) throw ShapeError("conditions and x differ in width");
    std::vector<std::vector<std::size_t>> rows(conditions.rows());
    ConditionalMoments out;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto xr = batch.x.row(r);
        bool found = false;
        for (std::size_t c = 0; c < conditions.rows() && !found; ++c) {
            auto cr = conditions.row(c);
            if (std::equal(xr.begin(), xr.end(), cr.begin())) {
                rows[c].push_back(r);
                found = true;
            }
        }
        if (!found) ++out.omitted_rows;
    }
    for (std::size_t c = 0; c < conditions.rows(); ++c) {
        if (rows[c].empty()) {
            ++out.empty_conditions;
            continue;
        }
        auto cr = conditions.row(c);
        out.groups.push_back(moments_of(std::vector<double>(cr.begin(), cr.end()), rows[c], batch.y));
    }
    return out;
}

PolarSpread polar_spread(const ConditionMoments& group) {
    if (group.mean.size() != 2) throw ShapeError("polar_spread needs 2-D samples");
    const double norm = std::hypot(group.mean[0], group.mean[1]);
    if (norm == 0.0) return {group.std_dev(0), group.std_dev(1)};
    const double ux = group.mean[0] / norm, uy = group.mean[1] / norm;
    const Matrix& c = group.covariance;
    const double radial = ux * ux * c(0, 0) + 2.0 * ux * uy * c(0, 1) + uy * uy * c(1, 1);
    const double tangential = uy * uy * c(0, 0) - 2.0 * ux * uy * c(0, 1) + ux * ux * c(1, 1);
    return {std::sqrt(std::max(radial, 0.0)), std::sqrt(std::max(tangential, 0.0))};
}

ModelReport compare_model(const ConditionalSampler& model, const ChannelModel& channel, const SymbolSource& source,
                          const EvalConfig& config) {
    if (source.dim() != channel.dim()) throw ConfigError("symbol source and channel dims differ");
    if (config.samples == 0) throw ConfigError("eval.samples must be positive");
    Rng symbol_rng(derive_seed(config.seed, 0));
    Rng truth_rng(derive_seed(config.seed, 1));
    Rng model_rng(derive_seed(config.seed, 2));

    const Matrix x = draw_symbols(source, config.samples, symbol_rng);
    const SampleBatch truth{x, channel.sample(x, truth_rng)};
    const SampleBatch generated{x, model(x, model_rng)};
    if (generated.y.rows() != x.rows() || generated.y.cols() != channel.dim())
        throw ShapeError("model output shape differs from the channel's");
    if (!generated.y.all_finite()) throw NumericError("model produced non-finite samples");

    ModelReport report;
    report.modulation = source.modulation;
    report.channel = channel;
    report.dims = channel.dim();
    report.eval = config;

    const auto truth_moments = conditional_moments(truth, source.constellation);
    const auto model_moments = conditional_moments(generated, source.constellation);

    // Row indices per condition, in constellation order (conditions with no rows are skipped).
    std::vector<std::vector<std::size_t>> rows(source.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < source.size(); ++c) {
            if (std::equal(x.row(r).begin(), x.row(r).end(), source.constellation.row(c).begin())) {
                rows[c].push_back(r);
                break;
            }
        }
    }

    std::vector<DensityEstimate> truth_densities, model_densities;
    std::size_t group = 0;
    for (std::size_t c = 0; c < source.size(); ++c) {
        if (rows[c].empty()) continue;
        Matrix yt(rows[c].size(), report.dims), ym(rows[c].size(), report.dims);
        for (std::size_t i = 0; i < rows[c].size(); ++i) {
            std::copy(truth.y.row(rows[c][i]).begin(), truth.y.row(rows[c][i]).end(), yt.row(i).begin());
            std::copy(generated.y.row(rows[c][i]).begin(), generated.y.row(rows[c][i]).end(), ym.row(i).begin());
        }
        ConditionReport cr;
        cr.x = truth_moments.groups[group].x;
        cr.truth = truth_moments.groups[group];
        cr.model = model_moments.groups[group];
        ++group;
        cr.truth_density = histogram(yt, config.bins, config.range);
        cr.model_density = histogram(ym, config.bins, config.range);
        cr.js = js_divergence(cr.truth_density, cr.model_density);
        cr.kl = kl_divergence(cr.truth_density, cr.model_density);
        for (std::size_t d = 0; d < report.dims; ++d) {
            const Matrix a = column_slice(yt, d, 1), b = column_slice(ym, d, 1);
            cr.w1.push_back(wasserstein1_1d(a.flat(), b.flat()));
        }
        if (report.dims == 2) {
            cr.truth_spread = polar_spread(cr.truth);
            cr.model_spread = polar_spread(cr.model);
        }
        truth_densities.push_back(cr.truth_density);
        model_densities.push_back(cr.model_density);
        report.conditions.push_back(std::move(cr));
    }

    report.marginal_truth = marginal_density(truth_densities);
    report.marginal_model = marginal_density(model_densities);
    report.marginal_js = js_divergence(report.marginal_truth, report.marginal_model);
    report.marginal_kl = kl_divergence(report.marginal_truth, report.marginal_model);
    report.marginal_empty_model_bins = empty_support_bins(report.marginal_truth, report.marginal_model);
    for (std::size_t d = 0; d < report.dims; ++d) {
        const Matrix a = column_slice(truth.y, d, 1), b = column_slice(generated.y, d, 1);
        report.marginal_w1.push_back(wasserstein1_1d(a.flat(), b.flat()));
    }
    double js_sum = 0.0;
    for (const auto& c : report.conditions) js_sum += c.js;
    report.mean_condition_js = js_sum / static_cast<double>(report.conditions.size());
    return report;
}

ModelReport compare_model(LayerStack& generator, const ChannelModel& channel, const SymbolSource& source,
                          const EvalConfig& config) {
    return compare_model([&generator](const Matrix& x, Rng& rng) { return generate(generator, x, rng); }, channel,
                         source, config);
}

namespace {

void put_number(std::ostream& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

nlohmann::json moments_json(const ConditionMoments& m) {
    nlohmann::json j;
    j["mean"] = m.mean;
    std::vector<double> stds;
    for (std::size_t d = 0; d < m.mean.size(); ++d) stds.push_back(m.std_dev(d));
    j["std"] = stds;
    std::vector<std::vector<double>> cov;
    for (std::size_t r = 0; r < m.covariance.rows(); ++r)
        cov.emplace_back(m.covariance.row(r).begin(), m.covariance.row(r).end());
    j["covariance"] = cov;
    j["skewness"] = m.skewness;
    return j;
}

nlohmann::json channel_json(const ChannelModel& c) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(c.kind));
    switch (c.kind) {
    case ChannelKind::Awgn:
    case ChannelKind::ComplexAwgn: j["noise_std"] = c.noise_std; break;
    case ChannelKind::AdditiveChi2: j["dof"] = c.dof; break;
    case ChannelKind::NonlinearQam:
        j["noise_std"] = c.qam.noise_std;
        j["phase_offset"] = c.qam.phase_offset;
        j["phase_noise_std"] = c.qam.phase_noise_std;
        j["amam_alpha"] = c.qam.amam_alpha;
        j["amam_beta"] = c.qam.amam_beta;
        j["ampm_alpha"] = c.qam.ampm_alpha;
        j["ampm_beta"] = c.qam.ampm_beta;
        break;
    }
    return j;
}

} // namespace

void write_density_csv(std::ostream& out, const DensityEstimate& density) {
    if (density.dims() == 1) {
        out << "bin_center,mass\n";
        for (std::size_t i = 0; i < density.bins(0); ++i) {
            put_number(out, density.center(0, i));
            out << ',';
            put_number(out, density.mass[i]);
            out << '\n';
        }
        return;
    }
    out << "bin_x,bin_y,mass\n";
    const std::size_t ny = density.bins(1);
    for (std::size_t i = 0; i < density.bins(0); ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            put_number(out, density.center(0, i));
            out << ',';
            put_number(out, density.center(1, j));
            out << ',';
            put_number(out, density.mass[i * ny + j]);
            out << '\n';
        }
    }
}

std::string report_to_json(const ModelReport& report, const std::string& experiment, const std::string& objective) {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["objective"] = objective;
    j["modulation"] = std::string(to_string(report.modulation));
    j["channel"] = channel_json(report.channel);
    j["dims"] = report.dims;
    j["eval"] = {{"samples", report.eval.samples},
                 {"bins", report.eval.bins},
                 {"range", {report.eval.range.lo, report.eval.range.hi}},
                 {"seed", report.eval.seed}};
    nlohmann::json conditions = nlohmann::json::array();
    for (const auto& c : report.conditions) {
        nlohmann::json cj;
        cj["x"] = c.x;
        cj["count"] = c.truth.count;
        cj["truth"] = moments_json(c.truth);
        cj["model"] = moments_json(c.model);
        cj["js"] = c.js;
        cj["kl"] = c.kl;
        cj["w1"] = c.w1;
        if (report.dims == 2) {
            cj["truth_spread"] = {{"radial_std", c.truth_spread.radial_std},
                                  {"tangential_std", c.truth_spread.tangential_std}};
            cj["model_spread"] = {{"radial_std", c.model_spread.radial_std},
                                  {"tangential_std", c.model_spread.tangential_std}};
        }
        conditions.push_back(std::move(cj));
    }
    j["conditions"] = std::move(conditions);
    j["marginal"] = {{"js", report.marginal_js},
                     {"kl", report.marginal_kl},
                     {"empty_model_bins", report.marginal_empty_model_bins},
                     {"clipped_truth", report.marginal_truth.clipped_count},
                     {"clipped_model", report.marginal_model.clipped_count},
                     {"w1", report.marginal_w1}};
    j["mean_condition_js"] = report.mean_condition_js;
    return j.dump(2) + "\n";
}

} // namespace vcgan
