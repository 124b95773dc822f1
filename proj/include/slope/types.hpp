#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slope/kernels.hpp"

namespace slope {

/// Dense row-major matrix. Rows are contiguous so gemv kernels stream them.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::vector<double> matvec(const Matrix& A, std::span<const double> x) {
    if (x.size() != A.cols()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> out(A.rows());
    kernels::gemv(A.data().data(), A.rows(), A.cols(), x.data(), out.data());
    return out;
}

inline std::vector<double> matvec_t(const Matrix& A, std::span<const double> x) {
    if (x.size() != A.rows()) throw std::invalid_argument("matvec_t: dimension mismatch");
    std::vector<double> out(A.cols());
    kernels::gemv_t(A.data().data(), A.rows(), A.cols(), x.data(), out.data());
    return out;
}

/// Non-increasing, non-negative penalty magnitudes (lambda, alpha and theta
/// all share these constraints).
class PenaltySequence {
  public:
    PenaltySequence() = default;

    /// Validates the invariants; ascents within 1e-12 relative are snapped
    /// flat, anything larger throws.
    static PenaltySequence validated(std::vector<double> v);
    static PenaltySequence constant(std::size_t p, double c);
    static PenaltySequence zeros(std::size_t p) { return constant(p, 0.0); }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Multiply by a non-negative scalar (preserves the invariants).
    PenaltySequence scaled(double s) const;

    bool is_zero() const;
    double max() const { return values_.empty() ? 0.0 : values_.front(); }

  private:
    explicit PenaltySequence(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

struct Dataset {
    Matrix X;                                     // n x p design
    std::vector<double> y;                        // length n
    std::optional<std::vector<double>> beta_true; // length p
    std::optional<double> sigma_w;

    std::size_t n() const { return X.rows(); }
    std::size_t p() const { return X.cols(); }
    void check() const {
        if (X.rows() != y.size()) throw std::invalid_argument("dataset: rows(X) != len(y)");
        if (beta_true && beta_true->size() != X.cols())
            throw std::invalid_argument("dataset: len(beta_true) != cols(X)");
    }
};

struct CalibrationDomainError : std::runtime_error {
    explicit CalibrationDomainError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateTauError : std::runtime_error {
    explicit DegenerateTauError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slope
