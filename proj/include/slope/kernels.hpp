#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner-loop kernels. Scalar reference implementations plus
// AVX2 variants; the active backend is picked once at startup from CPUID
// and can be forced for equivalence testing.
namespace slope::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    double (*squared_distance)(const double*, const double*, std::size_t);
    // y += a*x
    void (*axpy)(double, const double*, double*, std::size_t);
    // out = a*x + b*y
    void (*combine)(double, const double*, double, const double*, double*, std::size_t);
    // out[i] = sgn(v[i]) * max(|v[i]| - t, 0)
    void (*soft_threshold)(const double*, double, double*, std::size_t);
    // out = A x, A row-major (rows x cols)
    void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
    // out = A^T x
    void (*gemv_t)(const double*, std::size_t, std::size_t, const double*, double*);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // only valid to call through if cpu_has_avx2()

bool cpu_has_avx2();
Backend active_backend();
std::string_view backend_name();
// Test hook; throws std::runtime_error if the backend is unsupported here.
void force_backend(Backend b);

const Ops& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sum_squares(const double* a, std::size_t n) { return active().sum_squares(a, n); }
inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return active().squared_distance(a, b, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void combine(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    active().combine(a, x, b, y, out, n);
}
inline void soft_threshold(const double* v, double t, double* out, std::size_t n) {
    active().soft_threshold(v, t, out, n);
}
inline void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    active().gemv(A, rows, cols, x, out);
}
inline void gemv_t(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    active().gemv_t(A, rows, cols, x, out);
}

}  // namespace slope::kernels
