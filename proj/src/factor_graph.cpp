#include "scw/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scw/errors.hpp"

namespace scw {

FactorTable standardize(const FactorTable& raw) {
  const std::size_t n = raw.n_samples();
  if (n == 0 || raw.n_factors() == 0) throw DataError("standardize: empty factor table");
  if (n < 2) throw DataError("standardize: need at least 2 samples");
  if (!raw.values.all_finite()) throw DataError("standardize: non-finite factor value");

  FactorTable out{Matrix(n, raw.n_factors()), raw.names};
  for (std::size_t d = 0; d < raw.n_factors(); ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += raw.values(i, d);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = raw.values(i, d) - mean;
      var += dev * dev;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    const bool constant = sd <= 1e-14 * std::max(1.0, std::abs(mean));
    for (std::size_t i = 0; i < n; ++i) {
      out.values(i, d) = constant ? 0.0 : (raw.values(i, d) - mean) / sd;
    }
  }
  return out;
}

FactorGraph build_graph(const FactorTable& factors, std::size_t k) {
  const std::size_t n = factors.n_samples();
  if (n < 2) throw DataError("build_graph: need at least 2 samples");
  if (k < 1 || k >= n) {
    throw UsageError("build_graph: k=" + std::to_string(k) + " must lie in [1, " +
                     std::to_string(n - 1) + "]");
  }
  if (!factors.values.all_finite()) throw DataError("build_graph: non-finite factor value");

  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = factors.values.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto sj = factors.values.row(j);
      double s = 0.0;
      for (std::size_t d = 0; d < si.size(); ++d) s += (si[d] - sj[d]) * (si[d] - sj[d]);
      dist(i, j) = s;
      dist(j, i) = s;
    }
  }

  FactorGraph g{Matrix(n, n), k, std::vector<double>(n, 0.0)};
  std::vector<std::size_t> candidates;
  candidates.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) candidates.push_back(j);
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), [&](std::size_t a, std::size_t b) {
                        if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
                        return a < b;
                      });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = candidates[r];
      const double w = 1.0 / (dist(i, j) + 1.0);
      g.adjacency(i, j) = w;
      g.adjacency(j, i) = w;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = g.adjacency.row(i);
    g.degree[i] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  return g;
}

Matrix laplacian(const FactorGraph& graph) {
  const auto& a = graph.adjacency;
  Matrix lap(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i == j) continue;
      lap(i, j) = -a(i, j);
      deg += a(i, j);
    }
    lap(i, i) = deg;
  }
  return lap;
}

std::vector<double> LaplacianSpectrum::nonnull_eigenvalues() const {
  return {eigenvalues.begin() + static_cast<std::ptrdiff_t>(null_dimension), eigenvalues.end()};
}

LaplacianSpectrum laplacian_spectrum(const Matrix& lap) {
  auto eig = symmetric_eigen(lap);
  LaplacianSpectrum s{std::move(eig.eigenvalues), std::move(eig.eigenvectors), 0};
  while (s.null_dimension < s.eigenvalues.size() &&
         s.eigenvalues[s.null_dimension] <= kNullEigenvalueTolerance) {
    ++s.null_dimension;
  }
  return s;
}

SpectralBasis spectral_basis(const LaplacianSpectrum& spectrum, std::optional<std::size_t> m) {
  const std::size_t available = spectrum.eigenvalues.size() - spectrum.null_dimension;
  std::size_t count = 0;
  if (m) {
    count = *m;
  } else {
    count = std::min(select_m_changepoint(spectrum.nonnull_eigenvalues()), available);
  }
  if (count > available) {
    throw UsageError("spectral_basis: requested M=" + std::to_string(count) + " but only " +
                     std::to_string(available) + " non-null eigenpairs exist");
  }
  const std::size_t n = spectrum.eigenvectors.rows();
  SpectralBasis out{Matrix(n, count), {}, spectrum.null_dimension};
  out.eigenvalues.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t src = spectrum.null_dimension + j;
    out.eigenvalues.push_back(spectrum.eigenvalues[src]);
    for (std::size_t i = 0; i < n; ++i) out.basis(i, j) = spectrum.eigenvectors(i, src);
  }
  return out;
}

SpectralBasis spectral_basis(const Matrix& lap, std::optional<std::size_t> m) {
  return spectral_basis(laplacian_spectrum(lap), m);
}

std::size_t select_m_changepoint(const std::vector<double>& eigenvalues) {
  std::vector<double> nonnull;
  for (double v : eigenvalues)
    if (v > kNullEigenvalueTolerance) nonnull.push_back(v);
  std::sort(nonnull.begin(), nonnull.end());
  if (nonnull.size() < 2) {
    throw DataError("select_m_changepoint: need at least 2 non-null eigenvalues");
  }
  const std::size_t considered = std::min(nonnull.size(), kMaxChangepointM);
  std::size_t best = 1;
  double best_ratio = -1.0;
  for (std::size_t k = 1; k < considered; ++k) {
    const double ratio = nonnull[k] / nonnull[k - 1];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  return std::clamp<std::size_t>(best, 2, kMaxChangepointM);
}

}  // namespace scw
