#pragma once

// Data-parallel inner loops of the dense-network engine. Each kernel exists as
// a scalar reference implementation and, on x86-64 hosts with AVX2+FMA, as an
// intrinsics variant. The variant is chosen once at startup (overridable with
// VCGAN_KERNELS=scalar|avx2) and every caller goes through active().

#include <cstddef>
#include <string_view>

namespace vcgan::kernels {

struct AdamCoeffs {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    std::string_view name;

    // c[m x n] = a[m x k] * b[k x n] + bias (bias of length n, or nullptr)
    void (*gemm_nn_bias)(const double* a, const double* b, const double* bias, double* c,
                         std::size_t m, std::size_t k, std::size_t n);
    // c[k x n] = a[m x k]^T * g[m x n]
    void (*gemm_tn)(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                    std::size_t n);
    // c[m x k] = g[m x n] * b[k x n]^T
    void (*gemm_nt)(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n);
    // out[j] = sum_i g[i x n][i, j]
    void (*column_sum)(const double* g, double* out, std::size_t m, std::size_t n);

    void (*relu)(double* x, std::size_t n);
    // grad[i] = 0 where out[i] <= 0
    void (*relu_backward)(const double* out, double* grad, std::size_t n);

    void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoeffs& coeffs);
    void (*clamp)(double* x, std::size_t n, double lo, double hi);
};

const KernelTable& scalar();

/// AVX2+FMA table, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2();

const KernelTable& active();

/// Force a table (tests and benchmarking). Returns the previous one.
const KernelTable& set_active(const KernelTable& table);

} // namespace vcgan::kernels
