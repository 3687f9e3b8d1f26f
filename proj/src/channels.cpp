#include "vcgan/channels.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vcgan/errors.hpp"

namespace vcgan {

std::string_view to_string(ChannelKind k) noexcept {
    switch (k) {
    case ChannelKind::Awgn: return "awgn";
    case ChannelKind::AdditiveChi2: return "chi2";
    case ChannelKind::ComplexAwgn: return "complex_awgn";
    case ChannelKind::NonlinearQam: return "nonlinear_qam";
    }
    return "unknown";
}

std::optional<ChannelKind> parse_channel_kind(std::string_view name) noexcept {
    for (ChannelKind k : {ChannelKind::Awgn, ChannelKind::AdditiveChi2, ChannelKind::ComplexAwgn, ChannelKind::NonlinearQam})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

void NonlinearQamParams::validate() const {
    if (!(noise_std >= 0.0)) throw ConfigError("nonlinear_qam: noise_std must be >= 0");
    if (!(phase_noise_std >= 0.0)) throw ConfigError("nonlinear_qam: phase_noise_std must be >= 0");
    if (!(amam_beta >= 0.0)) throw ConfigError("nonlinear_qam: amam_beta must be >= 0");
    if (!(ampm_beta >= 0.0)) throw ConfigError("nonlinear_qam: ampm_beta must be >= 0");
}

AmplifierResponse saleh_amplifier(double r, const NonlinearQamParams& p) noexcept {
    const double r2 = r * r;
    return {p.amam_alpha * r / (1.0 + p.amam_beta * r2), p.ampm_alpha * r2 / (1.0 + p.ampm_beta * r2)};
}

ChannelModel ChannelModel::awgn(double noise_std) {
    ChannelModel c;
    c.kind = ChannelKind::Awgn;
    c.noise_std = noise_std;
    return c;
}

ChannelModel ChannelModel::chi2(unsigned dof) {
    ChannelModel c;
    c.kind = ChannelKind::AdditiveChi2;
    c.dof = dof;
    return c;
}

ChannelModel ChannelModel::complex_awgn(double noise_std_per_dim) {
    ChannelModel c;
    c.kind = ChannelKind::ComplexAwgn;
    c.noise_std = noise_std_per_dim;
    return c;
}

ChannelModel ChannelModel::nonlinear_qam(const NonlinearQamParams& p) {
    ChannelModel c;
    c.kind = ChannelKind::NonlinearQam;
    c.qam = p;
    return c;
}

std::size_t ChannelModel::dim() const noexcept {
    return kind == ChannelKind::Awgn || kind == ChannelKind::AdditiveChi2 ? 1 : 2;
}

void ChannelModel::validate() const {
    switch (kind) {
    case ChannelKind::Awgn:
    case ChannelKind::ComplexAwgn:
        if (!(noise_std >= 0.0)) throw ConfigError("channel noise_std must be >= 0");
        break;
    case ChannelKind::AdditiveChi2:
        if (dof < 1) throw ConfigError("chi2 channel needs dof >= 1");
        break;
    case ChannelKind::NonlinearQam: qam.validate(); break;
    }
}

void ChannelModel::sample_row(std::span<const double> x, std::span<double> y, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    switch (kind) {
    case ChannelKind::Awgn:
    case ChannelKind::ComplexAwgn:
        for (std::size_t d = 0; d < x.size(); ++d) y[d] = x[d] + noise_std * normal(rng);
        break;
    case ChannelKind::AdditiveChi2: {
        std::chi_squared_distribution<double> chi2(static_cast<double>(dof));
        y[0] = x[0] + chi2(rng);
        break;
    }
    case ChannelKind::NonlinearQam: {
        const double r = std::hypot(x[0], x[1]);
        const double phi = std::atan2(x[1], x[0]);
        const auto amp = saleh_amplifier(r, qam);
        const double jitter = qam.phase_noise_std * normal(rng);
        const double theta = phi + amp.phase_shift + qam.phase_offset + jitter;
        const double n_i = qam.noise_std * normal(rng);
        const double n_q = qam.noise_std * normal(rng);
        y[0] = amp.amplitude * std::cos(theta) + n_i;
        y[1] = amp.amplitude * std::sin(theta) + n_q;
        break;
    }
    }
}

Matrix ChannelModel::sample(const Matrix& x, Rng& rng) const {
    if (x.cols() != dim())
        throw ShapeError("channel " + std::string(to_string(kind)) + " expects " + std::to_string(dim()) +
                         " input columns, got " + std::to_string(x.cols()));
    Matrix y(x.rows(), dim());
    for (std::size_t r = 0; r < x.rows(); ++r) sample_row(x.row(r), y.row(r), rng);
    return y;
}

Matrix awgn_channel(const Matrix& x, double noise_std, Rng& rng) {
    auto c = ChannelModel::awgn(noise_std);
    c.validate();
    return c.sample(x, rng);
}

Matrix chi2_channel(const Matrix& x, unsigned dof, Rng& rng) {
    auto c = ChannelModel::chi2(dof);
    c.validate();
    return c.sample(x, rng);
}

Matrix complex_awgn_channel(const Matrix& x, double noise_std_per_dim, Rng& rng) {
    auto c = ChannelModel::complex_awgn(noise_std_per_dim);
    c.validate();
    return c.sample(x, rng);
}

Matrix nonlinear_qam_channel(const Matrix& x, const NonlinearQamParams& p, Rng& rng) {
    auto c = ChannelModel::nonlinear_qam(p);
    c.validate();
    return c.sample(x, rng);
}

SampleBatch sample_dataset(const SymbolSource& source, const ChannelModel& channel, std::size_t n,
                           std::uint64_t seed) {
    if (source.dim() != channel.dim())
        throw ConfigError(std::string(to_string(source.modulation)) + " symbols do not fit channel " +
                          std::string(to_string(channel.kind)));
    channel.validate();
    Rng symbol_rng(derive_seed(seed, 0));
    Rng channel_rng(derive_seed(seed, 1));
    SampleBatch batch;
    batch.x = draw_symbols(source, n, symbol_rng);
    batch.y = channel.sample(batch.x, channel_rng);
    return batch;
}

namespace {

void write_number(std::ostream& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

double parse_number(std::string_view text) {
    double v = 0.0;
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("malformed number in CSV: '" + std::string(text) + "'");
    return v;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

} // namespace

void write_batch_csv(std::ostream& out, const SampleBatch& batch) {
    for (std::size_t d = 0; d < batch.x.cols(); ++d) out << (d ? "," : "") << "x_" << d;
    for (std::size_t d = 0; d < batch.y.cols(); ++d) out << ",y_" << d;
    out << '\n';
    for (std::size_t r = 0; r < batch.size(); ++r) {
        for (std::size_t d = 0; d < batch.x.cols(); ++d) {
            if (d) out << ',';
            write_number(out, batch.x(r, d));
        }
        for (std::size_t d = 0; d < batch.y.cols(); ++d) {
            out << ',';
            write_number(out, batch.y(r, d));
        }
        out << '\n';
    }
}

SampleBatch read_batch_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty sample CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    std::size_t x_dim = 0, y_dim = 0;
    for (const auto& h : header) {
        if (h == "x_" + std::to_string(x_dim) && y_dim == 0) {
            ++x_dim;
        } else if (h == "y_" + std::to_string(y_dim)) {
            ++y_dim;
        } else {
            throw ConfigError("unexpected CSV header column '" + h + "'");
        }
    }
    if (x_dim == 0 || y_dim == 0) throw ConfigError("sample CSV needs x_ and y_ columns");

    std::vector<double> xs, ys;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_commas(line);
        if (fields.size() != x_dim + y_dim)
            throw ConfigError("CSV row " + std::to_string(rows + 1) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(x_dim + y_dim));
        for (std::size_t i = 0; i < x_dim; ++i) xs.push_back(parse_number(fields[i]));
        for (std::size_t i = 0; i < y_dim; ++i) ys.push_back(parse_number(fields[x_dim + i]));
        ++rows;
    }
    return {Matrix(rows, x_dim, std::move(xs)), Matrix(rows, y_dim, std::move(ys))};
}

} // namespace vcgan
