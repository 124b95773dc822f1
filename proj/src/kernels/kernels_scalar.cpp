#include "slope/kernels.hpp"

#include <cmath>

namespace slope::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_squares_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void combine_scalar(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void soft_threshold_scalar(const double* v, double t, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::fabs(v[i]) - t;
        out[i] = m > 0.0 ? std::copysign(m, v[i]) : 0.0;
    }
}

void gemv_scalar(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    for (std::size_t i = 0; i < rows; ++i) out[i] = dot_scalar(A + i * cols, x, cols);
}

void gemv_t_scalar(const double* A, std::size_t rows, std::size_t cols, const double* x, double* out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) axpy_scalar(x[i], A + i * cols, out, cols);
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{dot_scalar,     sum_squares_scalar,   squared_distance_scalar,
                         axpy_scalar,    combine_scalar,       soft_threshold_scalar,
                         gemv_scalar,    gemv_t_scalar};
    return ops;
}

}  // namespace slope::kernels
