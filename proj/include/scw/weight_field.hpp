#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "scw/factor_graph.hpp"

namespace scw {

/// Per-sample loss weights W = c + E a over every sample of the cohort.
///
/// The basis covers training and held-out rows alike; only training rows
/// ever contribute to the gradient of `a`, and held-out weights are read off
/// the same formula once `a` is fixed. Because every basis column sums to
/// zero, the mean weight over all samples is exactly `c` for any `a`.
class WeightField {
public:
  WeightField(std::shared_ptr<const SpectralBasis> basis, double centering_c,
              std::vector<std::size_t> train_rows, std::vector<std::size_t> test_rows);

  double centering() const { return c_; }
  std::span<const double> coeffs() const { return a_; }
  std::span<double> coeffs() { return a_; }
  void set_coeffs(std::vector<double> a);

  const SpectralBasis& basis() const { return *basis_; }
  std::size_t m_count() const { return basis_->m_count(); }
  std::size_t n_samples() const { return basis_->n_samples(); }
  const std::vector<std::size_t>& train_rows() const { return train_; }
  const std::vector<std::size_t>& test_rows() const { return test_; }

  double weight(std::size_t row) const;
  std::vector<double> weights(std::span<const std::size_t> rows) const;
  std::vector<double> all_weights() const;

  /// d/da of sum_i w_i l_i + sum_i max(0, -w_i) over `rows`, with the
  /// losses held constant. Subgradient of the hinge at w = 0 is 0.
  std::vector<double> grad_a(std::span<const std::size_t> rows,
                             std::span<const double> losses) const;

private:
  std::shared_ptr<const SpectralBasis> basis_;
  double c_;
  std::vector<double> a_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> test_;
};

/// sum_i max(0, -w_i)
double negativity_penalty(std::span<const double> weights);

}  // namespace scw
