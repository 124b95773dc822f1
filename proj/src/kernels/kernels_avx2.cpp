// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be reached through the dispatch table after a CPUID check.
#include "slope/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>

namespace slope::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_squares_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void combine_avx2(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), r);
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void soft_threshold_avx2(const double* v, double t, double* out, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(t);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(v + i);
        __m256d sign = _mm256_and_pd(x, sign_mask);
        __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(sign_mask, x), vt), zero);
        _mm256_storeu_pd(out + i, _mm256_or_pd(mag, sign));
    }
    for (; i < n; ++i) {
        const double m = std::fabs(v[i]) - t;
        out[i] = m > 0.0 ? std::copysign(m, v[i]) : 0.0;
    }
}

void gemv_avx2(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    for (std::size_t i = 0; i < rows; ++i) out[i] = dot_avx2(A + i * cols, x, cols);
}

void gemv_t_avx2(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) axpy_avx2(x[i], A + i * cols, out, cols);
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops{dot_avx2,     sum_squares_avx2,   squared_distance_avx2,
                         axpy_avx2,    combine_avx2,       soft_threshold_avx2,
                         gemv_avx2,    gemv_t_avx2};
    return ops;
}

}  // namespace slope::kernels

#else

namespace slope::kernels {
const Ops& avx2_ops() { return scalar_ops(); }
}  // namespace slope::kernels

#endif
