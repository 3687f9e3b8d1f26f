#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "test_support.hpp"
#include "vcgan/channels.hpp"
#include "vcgan/errors.hpp"

using namespace vcgan;
using vcgan::testing::ks_statistic;
using vcgan::testing::mean;
using vcgan::testing::stddev;

namespace {

std::vector<double> column(const Matrix& m, std::size_t c) {
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c);
    return v;
}

std::vector<double> difference(const Matrix& y, const Matrix& x, std::size_t c) {
    std::vector<double> v(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) v[i] = y(i, c) - x(i, c);
    return v;
}

NonlinearQamParams identity_params() {
    NonlinearQamParams p;
    p.noise_std = 0.0;
    p.phase_offset = 0.0;
    p.phase_noise_std = 0.0;
    p.amam_alpha = 1.0;
    p.amam_beta = 0.0;
    p.ampm_alpha = 0.0;
    p.ampm_beta = 0.0;
    return p;
}

constexpr std::size_t kN = 100000;

} // namespace

TEST_CASE("awgn") {
    Rng rng(1);
    const Matrix x = draw_symbols(bpsk_source(), 1000, rng);
    CHECK(awgn_channel(x, 0.0, rng) == x);

    const Matrix plus(kN, 1, 1.0), minus(kN, 1, -1.0);
    Rng r1(5), r2(5);
    const auto yp = column(awgn_channel(plus, 1.0, r1), 0);
    CHECK(std::abs(mean(yp) - 1.0) < 0.01);
    CHECK(std::abs(stddev(yp) * stddev(yp) - 1.0) < 0.02);

    auto ym = column(awgn_channel(minus, 1.0, r2), 0);
    for (double& v : ym) v = -v;
    Rng r3(6);
    const auto yp_other = column(awgn_channel(plus, 1.0, r3), 0);
    CHECK(ks_statistic(ym, yp_other) < 0.01);
}

TEST_CASE("chi-squared channel") {
    Rng rng(2);
    const Matrix zero(kN, 1);
    const Matrix y = chi2_channel(zero, 2, rng);
    const auto v = column(y, 0);
    CHECK(std::abs(mean(v) - 2.0) < 0.05);
    CHECK(std::abs(stddev(v) * stddev(v) - 4.0) < 0.3);

    const Matrix x = draw_symbols(bpsk_source(), 5000, rng);
    const Matrix yx = chi2_channel(x, 3, rng);
    for (double d : difference(yx, x, 0)) CHECK(d >= 0.0);

    SUBCASE("matches a sum of squared normals") {
        for (unsigned dof : {1u, 2u, 5u}) {
            CAPTURE(dof);
            Rng a(100 + dof), b(200 + dof);
            const auto channel_draws = column(chi2_channel(Matrix(kN, 1), dof, a), 0);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> brute(kN);
            for (double& s : brute) {
                s = 0.0;
                for (unsigned k = 0; k < dof; ++k) {
                    const double z = normal(b);
                    s += z * z;
                }
            }
            CHECK(ks_statistic(channel_draws, brute) < 0.01);
        }
    }
    SUBCASE("matches the closed-form CDF for two degrees of freedom") {
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        double d = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const double cdf = 1.0 - std::exp(-sorted[i] / 2.0);
            d = std::max({d, std::abs(cdf - static_cast<double>(i) / kN), std::abs(cdf - static_cast<double>(i + 1) / kN)});
        }
        CHECK(d < 0.01);
    }
}

TEST_CASE("complex awgn") {
    Rng rng(3);
    const Matrix x = draw_symbols(qpsk_source(), 1000, rng);
    CHECK(complex_awgn_channel(x, 0.0, rng) == x);

    Matrix pt(kN, 2);
    for (std::size_t i = 0; i < kN; ++i) pt(i, 0) = pt(i, 1) = 1.0 / std::sqrt(2.0);
    const Matrix y = complex_awgn_channel(pt, 0.1, rng);
    const auto ni = difference(y, pt, 0), nq = difference(y, pt, 1);
    CHECK(std::abs(stddev(ni) / 0.1 - 1.0) < 0.05);
    CHECK(std::abs(stddev(nq) / 0.1 - 1.0) < 0.05);
    const double mi = mean(ni), mq = mean(nq);
    double cov = 0.0;
    for (std::size_t i = 0; i < kN; ++i) cov += (ni[i] - mi) * (nq[i] - mq);
    cov /= kN;
    CHECK(std::abs(cov / (stddev(ni) * stddev(nq))) < 0.02);
}

TEST_CASE("nonlinear qam") {
    SUBCASE("all effects off is the identity") {
        Rng rng(4);
        const Matrix x = draw_symbols(qam16_source(), 2000, rng);
        const Matrix y = nonlinear_qam_channel(x, identity_params(), rng);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.data()[i] - x.data()[i]) < 1e-14);
    }
    SUBCASE("saleh am/am at unit amplitude") {
        const auto r = saleh_amplifier(1.0, NonlinearQamParams{});
        CHECK(r.amplitude == doctest::Approx(2.1587 / 2.1517).epsilon(1e-14));
        CHECK(r.amplitude == doctest::Approx(1.00325).epsilon(1e-5));
        CHECK(r.phase_shift == doctest::Approx(4.0033 / 10.1040).epsilon(1e-14));
        CHECK(saleh_amplifier(0.0, NonlinearQamParams{}).amplitude == 0.0);
    }
    SUBCASE("phase noise alone leaves the amplitude untouched") {
        auto p = NonlinearQamParams{};
        p.noise_std = 0.0;
        Rng rng(5);
        const auto src = qam16_source();
        const Matrix x = draw_symbols(src, 20000, rng);
        const Matrix y = nonlinear_qam_channel(x, p, rng);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double expected = saleh_amplifier(std::hypot(x(i, 0), x(i, 1)), p).amplitude;
            CHECK(std::abs(std::hypot(y(i, 0), y(i, 1)) - expected) < 1e-12);
        }
    }
    SUBCASE("invalid parameters") {
        auto p = NonlinearQamParams{};
        p.phase_noise_std = -1.0;
        CHECK_THROWS_AS(p.validate(), ConfigError);
        p = NonlinearQamParams{};
        p.amam_beta = -0.1;
        CHECK_THROWS_AS(p.validate(), ConfigError);
    }
}

TEST_CASE("channels are memoryless under per-row streams") {
    const ChannelModel models[] = {ChannelModel::awgn(1.0), ChannelModel::chi2(2), ChannelModel::complex_awgn(0.1),
                                   ChannelModel::nonlinear_qam(NonlinearQamParams{})};
    for (const auto& ch : models) {
        CAPTURE(to_string(ch.kind));
        const auto src = ch.dim() == 1 ? bpsk_source() : qam16_source();
        const std::size_t n = 64;
        const Matrix x = draw_symbols(src, n, 9);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), Rng(10));
        Matrix y(n, ch.dim()), y_perm(n, ch.dim());
        for (std::size_t i = 0; i < n; ++i) {
            Rng row_rng(derive_seed(77, i));
            ch.sample_row(x.row(i), y.row(i), row_rng);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t src_row = perm[i];
            Rng row_rng(derive_seed(77, src_row));
            ch.sample_row(x.row(src_row), y_perm.row(i), row_rng);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < ch.dim(); ++c) CHECK(y_perm(i, c) == y(perm[i], c));
    }
}

TEST_CASE("channel model validation") {
    CHECK_THROWS_AS(ChannelModel::awgn(-1.0).validate(), ConfigError);
    CHECK_THROWS_AS(ChannelModel::chi2(0).validate(), ConfigError);
    CHECK(ChannelModel::complex_awgn(0.1).dim() == 2);
    for (auto k : {ChannelKind::Awgn, ChannelKind::AdditiveChi2, ChannelKind::ComplexAwgn, ChannelKind::NonlinearQam})
        CHECK(parse_channel_kind(to_string(k)) == k);
    CHECK_FALSE(parse_channel_kind("rayleigh").has_value());
}

TEST_CASE("sample_dataset") {
    const auto src = bpsk_source();
    const auto ch = ChannelModel::awgn(1.0);
    CHECK(sample_dataset(src, ch, 0, 1).size() == 0);
    const auto a = sample_dataset(src, ch, 1000, 4);
    const auto b = sample_dataset(src, ch, 1000, 4);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);

    const std::size_t n = 100000;
    const auto big = sample_dataset(src, ch, n, 5);
    std::size_t plus = 0;
    for (std::size_t i = 0; i < n; ++i) plus += big.x(i, 0) > 0.0;
    CHECK(std::abs(static_cast<double>(plus) - n / 2.0) < 3.0 * std::sqrt(n * 0.25));

    CHECK_THROWS_AS(sample_dataset(qpsk_source(), ch, 10, 1), ConfigError);
}

TEST_CASE("sample batch csv round trip") {
    const auto batch = sample_dataset(qpsk_source(), ChannelModel::complex_awgn(0.1), 50, 6);
    std::stringstream buf;
    write_batch_csv(buf, batch);
    const std::string text = buf.str();
    CHECK(text.rfind("x_0,x_1,y_0,y_1\n", 0) == 0);
    const auto back = read_batch_csv(buf);
    CHECK(back.x == batch.x);
    CHECK(back.y == batch.y);

    std::stringstream bad("x_0,y_0\n1,abc\n");
    CHECK_THROWS_AS(read_batch_csv(bad), ConfigError);
    std::stringstream ragged("x_0,y_0\n1\n");
    CHECK_THROWS_AS(read_batch_csv(ragged), ConfigError);
}
