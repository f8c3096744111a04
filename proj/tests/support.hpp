#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "scw/cohort.hpp"
#include "scw/factor_graph.hpp"
#include "scw/rng.hpp"
#include "scw/training.hpp"

namespace scw::testing {

inline double normal(Rng& rng) {
  // Box-Muller on raw engine output keeps draws identical across toolchains.
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline FactorTable random_factors(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng = substream(seed, "factors");
  FactorTable t;
  t.values = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) t.values(i, j) = normal(rng);
  for (std::size_t j = 0; j < d; ++j) t.names.push_back("f" + std::to_string(j));
  return t;
}

// Separable toy cohort: the label shifts every feature of every visit.
inline Cohort toy_cohort(std::size_t n, std::size_t width, std::uint64_t seed, double shift = 1.5,
                         std::size_t max_visits = 3) {
  Rng rng = substream(seed, "toy");
  Cohort c;
  for (std::size_t j = 0; j < width; ++j) c.data.feature_names.push_back("x" + std::to_string(j));
  c.factors.values = Matrix(n, 2);
  c.factors.names = {"sex", "age"};
  for (std::size_t i = 0; i < n; ++i) {
    Subject s;
    s.id = "T" + std::to_string(1000 + i);
    s.label = static_cast<int>(i % 2);
    const std::size_t visits = 1 + static_cast<std::size_t>(rng() % max_visits);
    s.visits = Matrix(visits, width);
    for (std::size_t t = 0; t < visits; ++t)
      for (std::size_t j = 0; j < width; ++j)
        s.visits(t, j) = (s.label ? shift : -shift) * 0.5 + normal(rng);
    c.data.subjects.push_back(std::move(s));
    c.factors.values(i, 0) = static_cast<double>(rng() % 2);
    c.factors.values(i, 1) = 40.0 + 10.0 * normal(rng);
  }
  return c;
}

inline std::shared_ptr<const SpectralBasis> basis_for(const FactorTable& raw, std::size_t k,
                                                      std::optional<std::size_t> m) {
  const auto g = build_graph(standardize(raw), k);
  return std::make_shared<const SpectralBasis>(spectral_basis(laplacian(g), m));
}

inline Split alternate_split(std::size_t n, std::size_t every = 4) {
  Split s;
  for (std::size_t i = 0; i < n; ++i) (i % every == 0 ? s.test : s.train).push_back(i);
  return s;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace scw::testing
