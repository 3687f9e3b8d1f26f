#include "vcgan/rng.hpp"

namespace vcgan {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix out(rows, cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.flat()) v = normal(rng);
    return out;
}

} // namespace vcgan
