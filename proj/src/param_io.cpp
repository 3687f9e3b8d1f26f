#include "vcgan/param_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "vcgan/errors.hpp"

namespace vcgan {
namespace {

constexpr std::array<char, 8> kMagic{'V', 'C', 'G', 'A', 'N', 'S', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ConfigError("model file truncated");
    return value;
}

} // namespace

void save_stack(std::ostream& out, const LayerStack& stack, std::uint64_t seed) {
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, seed);
    put(out, static_cast<std::uint32_t>(stack.layers().size()));
    for (const auto& layer : stack.layers()) {
        put(out, static_cast<std::uint32_t>(layer.kind));
        put(out, static_cast<std::uint64_t>(layer.in_dim));
        put(out, static_cast<std::uint64_t>(layer.out_dim));
    }
    for (auto block : stack.parameter_blocks())
        out.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size_bytes()));
    if (!out) throw std::ios_base::failure("failed writing layer stack");
}

SavedStack load_stack(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ConfigError("not a layer stack file");
    if (get<std::uint32_t>(in) != kVersion) throw ConfigError("unsupported layer stack file version");
    SavedStack saved;
    saved.seed = get<std::uint64_t>(in);
    const auto count = get<std::uint32_t>(in);
    std::vector<DenseLayer> layers;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto kind_raw = get<std::uint32_t>(in);
        if (kind_raw > static_cast<std::uint32_t>(LayerKind::Sampler)) throw ConfigError("unknown layer kind");
        const auto kind = static_cast<LayerKind>(kind_raw);
        const auto in_dim = get<std::uint64_t>(in);
        const auto out_dim = get<std::uint64_t>(in);
        if (kind == LayerKind::Sampler) {
            if (in_dim != 2 * out_dim) throw ShapeError("sampler layer with in_dim != 2 * out_dim");
            layers.push_back(DenseLayer::sampler(out_dim));
        } else {
            layers.push_back(DenseLayer::fully_connected(kind, in_dim, out_dim));
        }
    }
    saved.stack = LayerStack(std::move(layers));
    for (auto block : saved.stack.parameter_blocks()) {
        if (!in.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size_bytes())))
            throw ConfigError("model file truncated");
    }
    return saved;
}

void save_stack_file(const std::filesystem::path& path, const LayerStack& stack, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    save_stack(out, stack, seed);
}

SavedStack load_stack_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path.string());
    return load_stack(in);
}

} // namespace vcgan
