#include "scw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scw/errors.hpp"

namespace scw {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw UsageError("Matrix: entry count " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Matrix::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r + 1; c < cols_; ++c)
      worst = std::max(worst, std::abs((*this)(r, c) - (*this)(c, r)));
  return worst;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) {
    throw UsageError("matvec: vector length " + std::to_string(v.size()) +
                     " does not match matrix columns " + std::to_string(m.cols()));
  }
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw UsageError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void canonicalize_sign(std::span<double> v) {
  if (v.empty()) return;
  double max_abs = 0.0;
  for (double x : v) max_abs = std::max(max_abs, std::abs(x));
  // Magnitudes equal up to round-off count as a tie, which goes to the
  // lowest index; otherwise the sign of e.g. (1, 0, -1)/sqrt(2) would hinge
  // on the last bit of each entry.
  std::size_t best = 0;
  while (std::abs(v[best]) < max_abs * (1.0 - 1e-9)) ++best;
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kOffDiagonalTolerance = 1e-12;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p)
    for (std::size_t q = p + 1; q < a.cols(); ++q) s += a(p, q) * a(p, q);
  return std::sqrt(2.0 * s);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition symmetric_eigen(const Matrix& m) {
  if (!m.square()) {
    throw UsageError("symmetric_eigen: matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected square");
  }
  if (!m.all_finite()) throw NumericalError("symmetric_eigen: non-finite entries");
  if (m.max_asymmetry() > kSymmetryTolerance) {
    throw UsageError("symmetric_eigen: matrix is not symmetric");
  }
  const std::size_t n = m.rows();

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  // Rows of vt are the eigenvectors, so every rotation touches contiguous memory.
  Matrix vt = Matrix::identity(n);
  const double tolerance = kOffDiagonalTolerance * std::max(1.0, frobenius_norm(a));

  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) < tolerance) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Below working precision relative to both diagonals: drop it.
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = rp[k];
          const double akq = rq[k];
          rp[k] = c * akp - s * akq;
          rq[k] = s * akp + c * akq;
          a(k, p) = rp[k];
          a(k, q) = rq[k];
        }
        rp[p] = app - t * apq;
        rq[q] = aqq + t * apq;
        rp[q] = 0.0;
        rq[p] = 0.0;

        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }
  if (!converged && off_diagonal_norm(a) >= tolerance) {
    throw NumericalError("symmetric_eigen: no convergence within 100 sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    auto row = vt.row(src);
    std::copy(row.begin(), row.end(), v.begin());
    const double norm = std::sqrt(dot(v, v));
    for (double& x : v) x /= norm;
    canonicalize_sign(v);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v[i];
  }
  return out;
}

}  // namespace scw
