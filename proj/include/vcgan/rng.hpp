#pragma once

#include <cstdint>
#include <random>

#include "vcgan/matrix.hpp"

namespace vcgan {

using Rng = std::mt19937_64;

/// Independent sub-seed for stream `stream` of a master seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// rows x cols of i.i.d. N(0, 1) draws.
Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng);

} // namespace vcgan
