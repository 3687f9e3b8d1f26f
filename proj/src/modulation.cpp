#include "vcgan/modulation.hpp"

#include <algorithm>
#include <cmath>

namespace vcgan {

std::string_view to_string(Modulation m) noexcept {
    switch (m) {
    case Modulation::Bpsk: return "bpsk";
    case Modulation::Qpsk: return "qpsk";
    case Modulation::Qam16: return "qam16";
    }
    return "unknown";
}

std::optional<Modulation> parse_modulation(std::string_view name) noexcept {
    for (Modulation m : {Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16})
        if (to_string(m) == name) return m;
    return std::nullopt;
}

SymbolSource bpsk_source() { return {Modulation::Bpsk, Matrix{{-1.0}, {1.0}}}; }

SymbolSource qpsk_source() {
    const double a = 1.0 / std::sqrt(2.0);
    return {Modulation::Qpsk, Matrix{{a, a}, {-a, a}, {-a, -a}, {a, -a}}};
}

SymbolSource qam16_source() {
    const double scale = 1.0 / std::sqrt(10.0);
    const double levels[] = {-3.0, -1.0, 1.0, 3.0};
    Matrix points(16, 2);
    std::size_t r = 0;
    for (double i : levels) {
        for (double q : levels) {
            points(r, 0) = i * scale;
            points(r, 1) = q * scale;
            ++r;
        }
    }
    return {Modulation::Qam16, std::move(points)};
}

SymbolSource make_source(Modulation m) {
    switch (m) {
    case Modulation::Bpsk: return bpsk_source();
    case Modulation::Qpsk: return qpsk_source();
    case Modulation::Qam16: return qam16_source();
    }
    return bpsk_source();
}

Matrix draw_symbols(const SymbolSource& source, std::size_t n, Rng& rng) {
    Matrix out(n, source.dim());
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    for (std::size_t r = 0; r < n; ++r) {
        auto point = source.constellation.row(pick(rng));
        std::copy(point.begin(), point.end(), out.row(r).begin());
    }
    return out;
}

Matrix draw_symbols(const SymbolSource& source, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return draw_symbols(source, n, rng);
}

} // namespace vcgan
