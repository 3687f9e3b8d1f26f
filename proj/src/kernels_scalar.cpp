#include <algorithm>
#include <cmath>

#include "vcgan/kernels.hpp"

namespace vcgan::kernels {
namespace {

void gemm_nn_bias(const double* a, const double* b, const double* bias, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = bias ? bias[j] : 0.0;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    std::fill(c, c + k * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
        }
    }
}

void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
            c[i * k + p] = s;
        }
    }
}

void column_sum(const double* g, double* out, std::size_t m, std::size_t n) {
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += g[i * n + j];
}

void relu(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* out, double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!(out[i] > 0.0)) grad[i] = 0.0;
}

void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoeffs& k) {
    const double one_m_b1 = 1.0 - k.beta1;
    const double one_m_b2 = 1.0 - k.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = k.beta1 * m[i] + one_m_b1 * g;
        v[i] = k.beta2 * v[i] + one_m_b2 * (g * g);
        const double m_hat = m[i] / k.bias_correction1;
        const double v_hat = v[i] / k.bias_correction2;
        param[i] -= k.learning_rate * m_hat / (std::sqrt(v_hat) + k.epsilon);
    }
}

void clamp(double* x, std::size_t n, double lo, double hi) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

} // namespace

const KernelTable& scalar() {
    static const KernelTable table{"scalar",    gemm_nn_bias, gemm_tn,     gemm_nt,    column_sum,
                                   relu,        relu_backward, adam_update, clamp};
    return table;
}

} // namespace vcgan::kernels
