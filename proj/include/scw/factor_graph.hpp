#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scw/linalg.hpp"

namespace scw {

/// Auxiliary per-sample factors (sex, age, ...). They shape the graph and
/// therefore the weights, but are never fed to the classifier.
struct FactorTable {
  Matrix values;  // sample x factor
  std::vector<std::string> names;

  std::size_t n_samples() const { return values.rows(); }
  std::size_t n_factors() const { return values.cols(); }
};

struct FactorGraph {
  Matrix adjacency;
  std::size_t k_neighbors = 0;
  std::vector<double> degree;
};

struct SpectralBasis {
  Matrix basis;                     // N x M
  std::vector<double> eigenvalues;  // the M retained, ascending
  std::size_t null_dimension = 0;   // discarded near-zero eigenpairs

  std::size_t m_count() const { return basis.cols(); }
  std::size_t n_samples() const { return basis.rows(); }
};

inline constexpr double kNullEigenvalueTolerance = 1e-8;
inline constexpr std::size_t kMaxChangepointM = 50;

/// Column-wise z-scores over all samples using the population standard
/// deviation; constant columns become zeros.
FactorTable standardize(const FactorTable& raw);

/// Symmetric kNN similarity graph: A_ij = 1 / (squared distance + 1) when
/// either sample is among the other's k nearest (ties to the lower index).
FactorGraph build_graph(const FactorTable& standardized, std::size_t k);

Matrix laplacian(const FactorGraph& graph);

/// Spectrum of the Laplacian with the null-space (eigenvalue <= 1e-8) split off.
struct LaplacianSpectrum {
  std::vector<double> eigenvalues;  // all n, ascending
  Matrix eigenvectors;
  std::size_t null_dimension = 0;

  std::vector<double> nonnull_eigenvalues() const;
};

LaplacianSpectrum laplacian_spectrum(const Matrix& lap);

/// First m eigenvectors past the null space. m == nullopt selects M with
/// select_m_changepoint.
SpectralBasis spectral_basis(const LaplacianSpectrum& spectrum, std::optional<std::size_t> m);
SpectralBasis spectral_basis(const Matrix& lap, std::optional<std::size_t> m);

/// Number of eigenbases at the dominant relative gap lambda_{k+1}/lambda_k
/// among the first min(n-1, 50) non-null eigenvalues, clamped to [2, 50].
/// Near-zero entries in the input are ignored.
std::size_t select_m_changepoint(const std::vector<double>& eigenvalues);

}  // namespace scw
