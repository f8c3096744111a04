#include "scw/weight_field.hpp"

#include <algorithm>
#include <string>

#include "scw/errors.hpp"

namespace scw {

WeightField::WeightField(std::shared_ptr<const SpectralBasis> basis, double centering_c,
                         std::vector<std::size_t> train_rows, std::vector<std::size_t> test_rows)
    : basis_(std::move(basis)), c_(centering_c), train_(std::move(train_rows)),
      test_(std::move(test_rows)) {
  if (!basis_) throw UsageError("WeightField: null basis");
  a_.assign(basis_->m_count(), 0.0);

  const std::size_t n = basis_->n_samples();
  std::vector<int> seen(n, 0);
  for (auto rows : {&train_, &test_}) {
    for (std::size_t r : *rows) {
      if (r >= n) throw UsageError("WeightField: row " + std::to_string(r) + " out of range");
      if (seen[r]++) throw UsageError("WeightField: row " + std::to_string(r) + " listed twice");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw UsageError("WeightField: train and test rows must cover every sample");
  }
}

void WeightField::set_coeffs(std::vector<double> a) {
  if (a.size() != a_.size()) {
    throw UsageError("WeightField: coefficient length " + std::to_string(a.size()) +
                     " does not match basis width " + std::to_string(a_.size()));
  }
  a_ = std::move(a);
}

double WeightField::weight(std::size_t row) const {
  if (row >= n_samples()) throw UsageError("WeightField: row " + std::to_string(row) + " out of range");
  return c_ + dot(basis_->basis.row(row), a_);
}

std::vector<double> WeightField::weights(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(weight(r));
  return out;
}

std::vector<double> WeightField::all_weights() const {
  std::vector<double> out(n_samples());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = weight(r);
  return out;
}

std::vector<double> WeightField::grad_a(std::span<const std::size_t> rows,
                                        std::span<const double> losses) const {
  if (rows.size() != losses.size()) throw UsageError("grad_a: rows and losses differ in length");
  std::vector<double> g(a_.size(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double w = weight(rows[k]);
    const double coef = losses[k] - (w < 0.0 ? 1.0 : 0.0);
    const auto e = basis_->basis.row(rows[k]);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += e[j] * coef;
  }
  return g;
}

double negativity_penalty(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += std::max(0.0, -w);
  return s;
}

}  // namespace scw
