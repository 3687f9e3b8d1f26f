// Compiled with -mavx2 -mfma -ffp-contract=off. Only reached through the
// dispatch table after a CPU feature check.

#include "vcgan/kernels.hpp"

#if defined(VCGAN_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <vector>

namespace vcgan::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 4), _mm256_loadu_pd(y + j + 4), a1);
        a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 8), _mm256_loadu_pd(y + j + 8), a2);
        a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 12), _mm256_loadu_pd(y + j + 12), a3);
    }
    for (; j + 4 <= n; j += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), a0);
    double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
    for (; j < n; ++j) s += x[j] * y[j];
    return s;
}

// y[0..n) += a * x[0..n)
void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(y + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
    for (; j < n; ++j) y[j] += a * x[j];
}

// One row of c over columns [j, j + 4 * W), accumulated in registers.
template <int W>
inline void nn_row_block(const double* arow, const double* b, const double* bias, double* crow, std::size_t k,
                         std::size_t n, std::size_t j) {
    __m256d acc[W];
    for (int w = 0; w < W; ++w) acc[w] = bias ? _mm256_loadu_pd(bias + j + 4 * w) : _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(arow + p);
        const double* brow = b + p * n + j;
        for (int w = 0; w < W; ++w) acc[w] = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4 * w), acc[w]);
    }
    for (int w = 0; w < W; ++w) _mm256_storeu_pd(crow + j + 4 * w, acc[w]);
}

// Two rows of c over 16 columns starting at j; each b load feeds two FMAs.
inline void nn_two_rows16(const double* a0, const double* a1, const double* b, const double* bias, double* c0,
                          double* c1, std::size_t k, std::size_t n, std::size_t j) {
    __m256d x0, x1, x2, x3;
    if (bias) {
        x0 = _mm256_loadu_pd(bias + j);
        x1 = _mm256_loadu_pd(bias + j + 4);
        x2 = _mm256_loadu_pd(bias + j + 8);
        x3 = _mm256_loadu_pd(bias + j + 12);
    } else {
        x0 = x1 = x2 = x3 = _mm256_setzero_pd();
    }
    __m256d y0 = x0, y1 = x1, y2 = x2, y3 = x3;
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow), b1 = _mm256_loadu_pd(brow + 4);
        const __m256d b2 = _mm256_loadu_pd(brow + 8), b3 = _mm256_loadu_pd(brow + 12);
        const __m256d u = _mm256_broadcast_sd(a0 + p), v = _mm256_broadcast_sd(a1 + p);
        x0 = _mm256_fmadd_pd(u, b0, x0);
        x1 = _mm256_fmadd_pd(u, b1, x1);
        x2 = _mm256_fmadd_pd(u, b2, x2);
        x3 = _mm256_fmadd_pd(u, b3, x3);
        y0 = _mm256_fmadd_pd(v, b0, y0);
        y1 = _mm256_fmadd_pd(v, b1, y1);
        y2 = _mm256_fmadd_pd(v, b2, y2);
        y3 = _mm256_fmadd_pd(v, b3, y3);
    }
    _mm256_storeu_pd(c0 + j, x0);
    _mm256_storeu_pd(c0 + j + 4, x1);
    _mm256_storeu_pd(c0 + j + 8, x2);
    _mm256_storeu_pd(c0 + j + 12, x3);
    _mm256_storeu_pd(c1 + j, y0);
    _mm256_storeu_pd(c1 + j + 4, y1);
    _mm256_storeu_pd(c1 + j + 8, y2);
    _mm256_storeu_pd(c1 + j + 12, y3);
}

void nn_row(const double* arow, const double* b, const double* bias, double* crow, std::size_t k, std::size_t n,
            std::size_t j) {
    for (; j + 16 <= n; j += 16) nn_row_block<4>(arow, b, bias, crow, k, n, j);
    for (; j + 4 <= n; j += 4) nn_row_block<1>(arow, b, bias, crow, k, n, j);
    for (; j < n; ++j) {
        double s = bias ? bias[j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
        crow[j] = s;
    }
}

void gemm_nn_bias(const double* a, const double* b, const double* bias, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
    if (n == 1) {
        const double b0 = bias ? bias[0] : 0.0;
        for (std::size_t i = 0; i < m; ++i) c[i] = b0 + dot(a + i * k, b, k);
        return;
    }
    const std::size_t n16 = n - n % 16;
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        const double* a0 = a + i * k;
        const double* a1 = a0 + k;
        for (std::size_t j = 0; j < n16; j += 16) nn_two_rows16(a0, a1, b, bias, c + i * n, c + (i + 1) * n, k, n, j);
        nn_row(a0, b, bias, c + i * n, k, n, n16);
        nn_row(a1, b, bias, c + (i + 1) * n, k, n, n16);
    }
    for (; i < m; ++i) nn_row(a + i * k, b, bias, c + i * n, k, n, 0);
}

// c[p, j..j+4W) = sum_i a[i, p] * g[i, j..j+4W) for rows p and p+1 (P = 2) or p (P = 1).
template <int P, int W>
inline void tn_block(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n,
                     std::size_t p, std::size_t j) {
    __m256d acc[P][W];
    for (int q = 0; q < P; ++q)
        for (int w = 0; w < W; ++w) acc[q][w] = _mm256_setzero_pd();
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n + j;
        __m256d gv[W];
        for (int w = 0; w < W; ++w) gv[w] = _mm256_loadu_pd(grow + 4 * w);
        for (int q = 0; q < P; ++q) {
            const __m256d av = _mm256_broadcast_sd(a + i * k + p + q);
            for (int w = 0; w < W; ++w) acc[q][w] = _mm256_fmadd_pd(av, gv[w], acc[q][w]);
        }
    }
    for (int q = 0; q < P; ++q)
        for (int w = 0; w < W; ++w) _mm256_storeu_pd(c + (p + q) * n + j + 4 * w, acc[q][w]);
}

template <int P>
void tn_rows(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n,
             std::size_t p) {
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) tn_block<P, 4>(a, g, c, m, k, n, p, j);
    for (; j + 4 <= n; j += 4) tn_block<P, 1>(a, g, c, m, k, n, p, j);
    for (; j < n; ++j) {
        for (int q = 0; q < P; ++q) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a[i * k + p + q] * g[i * n + j];
            c[(p + q) * n + j] = s;
        }
    }
}

void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    if (n == 1) {
        // c is a k-vector: accumulate g[i] * a[i, :]
        std::fill(c, c + k, 0.0);
        for (std::size_t i = 0; i < m; ++i) axpy(g[i], a + i * k, c, k);
        return;
    }
    std::size_t p = 0;
    for (; p + 2 <= k; p += 2) tn_rows<2>(a, g, c, m, k, n, p);
    for (; p < k; ++p) tn_rows<1>(a, g, c, m, k, n, p);
}

void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    if (n == 1) {
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c + i * k;
            std::fill(crow, crow + k, 0.0);
            axpy(g[i], b, crow, k);
        }
        return;
    }
    // c = g * bt with bt = b^T (n x k), then the row-major nn kernel applies.
    thread_local std::vector<double> bt;
    bt.resize(n * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    gemm_nn_bias(g, bt.data(), nullptr, c, m, n, k);
}

void column_sum(const double* g, double* out, std::size_t m, std::size_t n) {
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4)
            _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(grow + j)));
        for (; j < n; ++j) out[j] += grow[j];
    }
}

void relu(double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* out, double* grad, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(out + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad + i, _mm256_and_pd(_mm256_loadu_pd(grad + i), mask));
    }
    for (; i < n; ++i)
        if (!(out[i] > 0.0)) grad[i] = 0.0;
}

// Same operation order as the scalar reference, no contraction: bit-identical.
void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoeffs& k) {
    const __m256d b1 = _mm256_set1_pd(k.beta1), b2 = _mm256_set1_pd(k.beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - k.beta1), omb2 = _mm256_set1_pd(1.0 - k.beta2);
    const __m256d bc1 = _mm256_set1_pd(k.bias_correction1), bc2 = _mm256_set1_pd(k.bias_correction2);
    const __m256d lr = _mm256_set1_pd(k.learning_rate), eps = _mm256_set1_pd(k.epsilon);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d m_hat = _mm256_div_pd(mi, bc1);
        const __m256d v_hat = _mm256_div_pd(vi, bc2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
    }
    if (i < n) scalar().adam_update(param + i, grad + i, m + i, v + i, n - i, k);
}

void clamp(double* x, std::size_t n, double lo, double hi) {
    const __m256d lov = _mm256_set1_pd(lo), hiv = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_loadu_pd(x + i);
        t = _mm256_blendv_pd(t, lov, _mm256_cmp_pd(t, lov, _CMP_LT_OQ));
        t = _mm256_blendv_pd(t, hiv, _mm256_cmp_pd(hiv, t, _CMP_LT_OQ));
        _mm256_storeu_pd(x + i, t);
    }
    if (i < n) scalar().clamp(x + i, n - i, lo, hi);
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2",      gemm_nn_bias, gemm_tn,     gemm_nt,    column_sum,
                                   relu,        relu_backward, adam_update, clamp};
    return table;
}

} // namespace vcgan::kernels

#endif
