#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "scw/errors.hpp"
#include "scw/linalg.hpp"
#include "support.hpp"

using namespace scw;

namespace {

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, "sym");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = -10.0 + 20.0 * uniform01(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace

TEST_CASE("identity has unit eigenvalues and an orthonormal basis") {
  const auto eig = symmetric_eigen(Matrix::identity(3));
  for (double v : eig.eigenvalues) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  const auto g = matmul(eig.eigenvectors.transposed(), eig.eigenvectors);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("diagonal input gives sorted values and axis vectors") {
  Matrix m(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  m(2, 2) = 2.0;
  const auto eig = symmetric_eigen(m);
  CHECK(eig.eigenvalues == std::vector<double>{1.0, 2.0, 3.0});
  // Column k is the unit vector of the diagonal slot holding eigenvalue k.
  const std::size_t slot[] = {1, 2, 0};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 3; ++i) CHECK(eig.eigenvectors(i, k) == (i == slot[k] ? 1.0 : 0.0));
}

TEST_CASE("path graph of three nodes") {
  // Characteristic polynomial -l (l - 1)(l - 3).
  Matrix lap(3, 3, {1, -1, 0, -1, 2, -1, 0, -1, 1});
  const auto eig = symmetric_eigen(lap);
  CHECK(std::abs(eig.eigenvalues[0]) < 1e-12);
  CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-12));
  // lambda = 1 pairs with (1, 0, -1)/sqrt 2, sign-fixed to the first entry.
  CHECK(eig.eigenvectors(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(eig.eigenvectors(1, 1)) < 1e-12);
  CHECK(eig.eigenvectors(2, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)));
}

TEST_CASE("reconstruction and trace on random symmetric matrices") {
  for (std::size_t n : {1u, 2u, 5u, 17u, 60u, 200u}) {
    const Matrix m = random_symmetric(n, n);
    const auto eig = symmetric_eigen(m);
    const Matrix& v = eig.eigenvectors;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += v(i, k) * eig.eigenvalues[k] * v(j, k);
        worst = std::max(worst, std::abs(s - m(i, j)));
      }
    CHECK(worst < 1e-7);
    double trace = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
    for (double l : eig.eigenvalues) sum += l;
    CHECK(std::abs(trace - sum) < 1e-8);
    for (std::size_t k = 1; k < n; ++k) CHECK(eig.eigenvalues[k - 1] <= eig.eigenvalues[k]);
  }
}

TEST_CASE("eigendecomposition is bit-for-bit repeatable") {
  const Matrix m = random_symmetric(40, 7);
  const auto a = symmetric_eigen(m);
  const auto b = symmetric_eigen(m);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenvectors == b.eigenvectors);
}

TEST_CASE("sign convention puts the largest entry positive") {
  std::vector<double> v{0.2, -0.9, 0.3};
  canonicalize_sign(v);
  CHECK(v == std::vector<double>{-0.2, 0.9, -0.3});
  std::vector<double> tie{-0.5, 0.5};
  canonicalize_sign(tie);
  CHECK(tie == std::vector<double>{0.5, -0.5});
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(symmetric_eigen(Matrix(2, 3)), UsageError);
  Matrix asym(2, 2, {1, 2, 3, 1});
  CHECK_THROWS_AS(symmetric_eigen(asym), UsageError);
  Matrix bad(2, 2, {1, NAN, NAN, 1});
  CHECK_THROWS(symmetric_eigen(bad));
}

TEST_CASE("matvec examples") {
  CHECK(matvec(Matrix::identity(3), std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
  CHECK(matvec(Matrix(2, 3), std::vector<double>{4, 5, 6}) == std::vector<double>{0, 0});
  CHECK(matvec(Matrix(2, 2, {1, 2, 3, 4}), std::vector<double>{1, 1}) == std::vector<double>{3, 7});
  CHECK_THROWS_AS(matvec(Matrix(2, 2), std::vector<double>{1}), UsageError);
}
