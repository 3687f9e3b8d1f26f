#include <cstdlib>
#include <string_view>

#include "vcgan/kernels.hpp"

namespace vcgan::kernels {

#if defined(VCGAN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#if defined(VCGAN_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
    const char* env = std::getenv("VCGAN_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar();
    if (const KernelTable* t = avx2()) return t;
    return &scalar();
}

const KernelTable*& current() {
    static const KernelTable* table = initial_table();
    return table;
}

} // namespace

const KernelTable& active() { return *current(); }

const KernelTable& set_active(const KernelTable& table) {
    const KernelTable& prev = *current();
    current() = &table;
    return prev;
}

} // namespace vcgan::kernels
