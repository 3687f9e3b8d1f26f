#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "vcgan/matrix.hpp"
#include "vcgan/rng.hpp"

namespace vcgan {

enum class Modulation { Bpsk, Qpsk, Qam16 };

std::string_view to_string(Modulation m) noexcept;
std::optional<Modulation> parse_modulation(std::string_view name) noexcept;

/// Fixed constellation with a uniform prior. One point per row; 1 column for
/// real BPSK, 2 (I, Q) for the complex constellations.
struct SymbolSource {
    Modulation modulation;
    Matrix constellation;

    std::size_t dim() const noexcept { return constellation.cols(); }
    std::size_t size() const noexcept { return constellation.rows(); }
};

SymbolSource bpsk_source();
SymbolSource qpsk_source();   // (+-1, +-1) / sqrt(2)
SymbolSource qam16_source();  // {+-1, +-3}^2 / sqrt(10)
SymbolSource make_source(Modulation m);

/// n i.i.d. uniform draws over the constellation, one symbol per row.
Matrix draw_symbols(const SymbolSource& source, std::size_t n, Rng& rng);
Matrix draw_symbols(const SymbolSource& source, std::size_t n, std::uint64_t seed);

} // namespace vcgan
