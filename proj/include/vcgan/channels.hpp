#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>

#include "vcgan/matrix.hpp"
#include "vcgan/modulation.hpp"
#include "vcgan/rng.hpp"

namespace vcgan {

enum class ChannelKind { Awgn, AdditiveChi2, ComplexAwgn, NonlinearQam };

std::string_view to_string(ChannelKind k) noexcept;
std::optional<ChannelKind> parse_channel_kind(std::string_view name) noexcept;

/// Saleh-form amplifier plus phase impairments and AWGN on I/Q symbols.
struct NonlinearQamParams {
    double noise_std = 0.05;
    double phase_offset = 0.15;     // radians
    double phase_noise_std = 0.1;   // radians per symbol
    double amam_alpha = 2.1587;
    double amam_beta = 1.1517;
    double ampm_alpha = 4.0033;
    double ampm_beta = 9.1040;

    void validate() const;
};

/// Amplifier response at input amplitude r: output amplitude and phase shift.
struct AmplifierResponse {
    double amplitude;
    double phase_shift;
};
AmplifierResponse saleh_amplifier(double r, const NonlinearQamParams& p) noexcept;

/// Ground-truth stochastic channel p(y | x). Stateless apart from the RNG the
/// caller passes in; rows are sampled independently.
struct ChannelModel {
    ChannelKind kind = ChannelKind::Awgn;
    double noise_std = 1.0;  // AWGN std, or per-dimension std for ComplexAwgn
    unsigned dof = 2;        // AdditiveChi2 degrees of freedom
    NonlinearQamParams qam;

    static ChannelModel awgn(double noise_std);
    static ChannelModel chi2(unsigned dof);
    static ChannelModel complex_awgn(double noise_std_per_dim);
    static ChannelModel nonlinear_qam(const NonlinearQamParams& p);

    std::size_t dim() const noexcept;
    void validate() const;

    void sample_row(std::span<const double> x, std::span<double> y, Rng& rng) const;
    Matrix sample(const Matrix& x, Rng& rng) const;
};

Matrix awgn_channel(const Matrix& x, double noise_std, Rng& rng);
Matrix chi2_channel(const Matrix& x, unsigned dof, Rng& rng);
Matrix complex_awgn_channel(const Matrix& x, double noise_std_per_dim, Rng& rng);
Matrix nonlinear_qam_channel(const Matrix& x, const NonlinearQamParams& p, Rng& rng);

/// Paired transmitted/received samples.
struct SampleBatch {
    Matrix x;
    Matrix y;

    std::size_t size() const noexcept { return x.rows(); }
};

/// x drawn from `source`, y = channel(x); both streams derived from `seed`.
SampleBatch sample_dataset(const SymbolSource& source, const ChannelModel& channel, std::size_t n,
                           std::uint64_t seed);

/// CSV with header x_0..x_{d-1},y_0..y_{d-1}.
void write_batch_csv(std::ostream& out, const SampleBatch& batch);
SampleBatch read_batch_csv(std::istream& in);

} // namespace vcgan
