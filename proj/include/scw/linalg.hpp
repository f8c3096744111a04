#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scw {

/// Dense row-major real matrix.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;

  std::span<const double> data() const { return data_; }

  Matrix transposed() const;
  bool all_finite() const;
  // Largest |m_ij - m_ji|; square matrices only.
  double max_asymmetry() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]
};

std::vector<double> matvec(const Matrix& m, std::span<const double> v);
Matrix matmul(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in ascending order. Each eigenvector column is
/// normalised and sign-fixed so that its largest-magnitude entry is positive
/// (first such entry on ties), which makes results reproducible bit-for-bit
/// for identical input.
///
/// Throws UsageError for non-square or asymmetric (> 1e-10) input and
/// NumericalError when 100 sweeps do not reach convergence.
EigenDecomposition symmetric_eigen(const Matrix& m);

// In-place sign convention used by symmetric_eigen.
void canonicalize_sign(std::span<double> v);

}  // namespace scw
