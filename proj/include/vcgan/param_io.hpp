#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "vcgan/layer_stack.hpp"

namespace vcgan {

struct SavedStack {
    LayerStack stack;
    std::uint64_t seed = 0;
};

// Binary layout (host byte order, IEEE-754 doubles):
//   "VCGANSTK" | u32 version | u64 seed | u32 layer_count
//   per layer: u32 kind | u64 in_dim | u64 out_dim
//   per parameterized layer, in order: weights (in*out doubles), bias (out doubles)
void save_stack(std::ostream& out, const LayerStack& stack, std::uint64_t seed);
SavedStack load_stack(std::istream& in);

void save_stack_file(const std::filesystem::path& path, const LayerStack& stack, std::uint64_t seed);
SavedStack load_stack_file(const std::filesystem::path& path);

} // namespace vcgan
