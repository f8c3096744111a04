#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "scw/errors.hpp"
#include "scw/evaluation.hpp"
#include "support.hpp"

using namespace scw;

namespace {

std::vector<int> labels_of(std::size_t tp, std::size_t fn, std::size_t tn, std::size_t fp,
                           std::vector<int>& pred) {
  std::vector<int> y;
  pred.clear();
  auto push = [&](std::size_t n, int label, int guess) {
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(label);
      pred.push_back(guess);
    }
  };
  push(tp, 1, 1);
  push(fn, 1, 0);
  push(tn, 0, 0);
  push(fp, 0, 1);
  return y;
}

// Every multiset of `size` values drawn from 1..6, as sorted vectors.
void multisets(std::size_t size, double lowest, std::vector<double>& cur, std::vector<std::vector<double>>& out) {
  if (cur.size() == size) {
    out.push_back(cur);
    return;
  }
  for (double v = lowest; v <= 6.0; v += 1.0) {
    cur.push_back(v);
    multisets(size, v, cur, out);
    cur.pop_back();
  }
}

SamplePrediction sample(std::size_t i, int label, double prob, double weight) {
  return SamplePrediction{i, "S" + std::to_string(i), 0, label, prob, weight};
}

}  // namespace

TEST_CASE("balanced accuracy examples") {
  std::vector<int> pred;
  const auto y = labels_of(9, 1, 8, 2, pred);
  CHECK(balanced_accuracy_binary(y, pred) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(balanced_accuracy_binary(y, y) == 1.0);
  const std::vector<int> ones(y.size(), 1);
  const auto balanced = labels_of(5, 0, 0, 5, pred);
  CHECK(balanced_accuracy_binary(balanced, std::vector<int>(10, 1)) == 0.5);
  CHECK_THROWS_AS(balanced_accuracy_binary(ones, ones), DataError);
}

TEST_CASE("f1 examples") {
  std::vector<int> pred;
  const auto y = labels_of(8, 2, 5, 2, pred);
  CHECK(f1_score_binary(y, pred) == doctest::Approx(0.8).epsilon(1e-15));
  const auto none = labels_of(0, 4, 4, 0, pred);
  CHECK(f1_score_binary(none, pred) == 0.0);
  CHECK(f1_score_binary(y, y) == 1.0);
}

TEST_CASE("probabilities are thresholded at one half") {
  const std::vector<int> y{1, 1, 0, 0};
  const std::vector<double> p{0.5, 0.49, 0.2, 0.7};
  CHECK(balanced_accuracy(y, p) == 0.5);
  CHECK(f1_score(y, p) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("metrics agree with exhaustive enumeration") {
  for (std::size_t n = 2; n <= 8; ++n) {
    for (unsigned ybits = 0; ybits < (1u << n); ++ybits) {
      for (unsigned pbits = 0; pbits < (1u << n); ++pbits) {
        std::vector<int> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = (ybits >> i) & 1u;
          p[i] = (pbits >> i) & 1u;
        }
        std::map<int, std::pair<double, double>> per_class;  // hits, count
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          per_class[y[i]].first += y[i] == p[i];
          per_class[y[i]].second += 1;
          tp += y[i] == 1 && p[i] == 1;
          fp += y[i] == 0 && p[i] == 1;
          fn += y[i] == 1 && p[i] == 0;
        }
        const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
        REQUIRE(std::abs(f1_score_binary(y, p) - f1) <= 1e-12);
        if (per_class.size() == 2) {
          const double bacc = 0.5 * (per_class[0].first / per_class[0].second + per_class[1].first / per_class[1].second);
          REQUIRE(std::abs(balanced_accuracy_binary(y, p) - bacc) <= 1e-12);
          std::vector<int> y2(n), p2(n);
          for (std::size_t i = 0; i < n; ++i) {
            y2[i] = 1 - y[i];
            p2[i] = 1 - p[i];
          }
          REQUIRE(std::abs(balanced_accuracy_binary(y2, p2) - bacc) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("mann-whitney U against pair enumeration") {
  std::vector<std::vector<std::vector<double>>> by_size(7);
  for (std::size_t s = 1; s <= 6; ++s) {
    std::vector<double> cur;
    multisets(s, 1.0, cur, by_size[s]);
  }
  std::size_t checked = 0;
  for (std::size_t na = 1; na <= 6; ++na)
    for (std::size_t nb = 1; nb <= 6; ++nb)
      for (const auto& a : by_size[na])
        for (const auto& b : by_size[nb]) {
          double wins = 0.0;
          for (double x : a)
            for (double y : b) wins += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
          const auto r = mann_whitney_u(a, b);
          REQUIRE(r.u_a == wins);
          REQUIRE(r.u == std::min(wins, static_cast<double>(na * nb) - wins));
          REQUIRE(r.p_value >= 0.0);
          REQUIRE(r.p_value <= 1.0);
          ++checked;
        }
  CHECK(checked > 800000);
}

TEST_CASE("mann-whitney examples") {
  CHECK(mann_whitney_u(std::vector<double>{1, 2}, std::vector<double>{3, 4}).u == 0.0);
  CHECK(mann_whitney_u(std::vector<double>{5, 5}, std::vector<double>{5, 5}).p_value == 1.0);
  const auto r = mann_whitney_u(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{6, 7, 8, 9, 10});
  CHECK(r.u == 0.0);
  CHECK(r.p_value == doctest::Approx(0.012185780355344813).epsilon(1e-12));
  const auto tied = mann_whitney_u(std::vector<double>{1, 2, 2, 3}, std::vector<double>{2, 3, 3, 5, 6});
  CHECK(tied.u_a == 3.0);
  CHECK(tied.p_value == doctest::Approx(0.09934224785346528).epsilon(1e-12));
  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, std::vector<double>{1}), UsageError);
}

TEST_CASE("stratified folds") {
  const std::vector<int> ten{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const auto f = stratified_kfold(ten, 5, 3);
  for (std::size_t k = 0; k < 5; ++k) {
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < 10; ++i)
      if (f[i] == k) (ten[i] ? pos : neg)++;
    CHECK(pos == 1);
    CHECK(neg == 1);
  }

  std::vector<int> labels;
  for (int i = 0; i < 103; ++i) labels.push_back(i % 3 == 0);
  const auto a = stratified_kfold(labels, 5, 1);
  CHECK(a == stratified_kfold(labels, 5, 1));
  CHECK(a != stratified_kfold(labels, 5, 2));
  std::vector<std::size_t> size(5, 0), pos(5, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    REQUIRE(a[i] < 5);
    ++size[a[i]];
    pos[a[i]] += labels[i];
  }
  CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
  CHECK(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()) <= 1);
  CHECK_THROWS_AS(stratified_kfold(std::vector<int>{0, 0, 1}, 2, 0), DataError);
}

TEST_CASE("median split on a hand-built instance") {
  // High half (weights 5..8) perfect; low half at chance.
  std::vector<SamplePrediction> s{
      sample(0, 1, 0.9, 1), sample(1, 0, 0.9, 2), sample(2, 1, 0.1, 3), sample(3, 0, 0.1, 4),
      sample(4, 1, 0.9, 5), sample(5, 0, 0.1, 6), sample(6, 1, 0.8, 7), sample(7, 0, 0.2, 8)};
  const auto m = median_split_gap(s);
  CHECK(m.median_weight == 4.5);
  CHECK(m.n_high == 4);
  CHECK(m.n_low == 4);
  CHECK(m.bacc_high == 1.0);
  CHECK(m.bacc_low == 0.5);
  CHECK(m.gap_percent == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(m.gap_points == doctest::Approx(50.0).epsilon(1e-14));
  CHECK_FALSE(m.degenerate);

  for (auto& x : s) x.weight = 0.65;
  const auto flat = median_split_gap(s);
  CHECK(flat.degenerate);
  CHECK(flat.gap_percent == 0.0);
  CHECK(flat.n_low == 8);
}

TEST_CASE("tertiles are equal-count with ties to the lower bin") {
  const std::vector<double> nine{9, 1, 8, 2, 7, 3, 6, 4, 5};
  CHECK(tertile_bins(nine) == std::vector<std::size_t>{2, 0, 2, 0, 2, 0, 1, 1, 1});
  // Both cut points land on the tied value, which leaves the middle bin empty.
  const std::vector<double> tied{1, 1, 1, 1, 2, 3};
  CHECK(tertile_bins(tied) == std::vector<std::size_t>{0, 0, 0, 0, 2, 2});
  const std::vector<double> runs{6, 4, 5, 4, 6, 4, 5};
  CHECK(tertile_bins(runs) == std::vector<std::size_t>{2, 0, 1, 0, 2, 0, 1});
}

TEST_CASE("sub-cohort tables") {
  std::vector<SamplePrediction> s;
  std::vector<double> sex, age;
  for (std::size_t i = 0; i < 60; ++i) {
    s.push_back(sample(i, static_cast<int>(i % 2), i % 3 ? 0.8 : 0.3, 1.0));
    sex.push_back(static_cast<double>((i / 2) % 2));
    age.push_back(static_cast<double>(i));
  }
  const auto flat = factor_subcohort_table(s, sex, "sex");
  CHECK(flat.binary);
  REQUIRE(flat.groups.size() == 2);
  CHECK(flat.groups[0].n == 30);
  REQUIRE(flat.tests.size() == 1);
  CHECK(flat.tests[0].test.p_value > 0.05);

  for (std::size_t i = 0; i < 60; ++i) s[i].weight = 1.0 - 0.01 * age[i];
  const auto by_age = factor_subcohort_table(s, age, "age");
  CHECK_FALSE(by_age.binary);
  REQUIRE(by_age.groups.size() == 3);
  CHECK(by_age.tests.size() == 3);
  CHECK(by_age.groups[0].mean_weight > by_age.groups[2].mean_weight);
  CHECK(by_age.groups[0].upper < by_age.groups[1].lower);
  CHECK(by_age.tests[1].test.p_value < 0.001);
  CHECK(by_age.groups[1].bacc.has_value());
}

TEST_CASE("parallel_for visits each index once") {
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS(parallel_for(5, 2, [](std::size_t i) {
    if (i == 3) throw DataError("boom");
  }));
}

TEST_CASE("cross-validation and sweep on a small cohort") {
  const auto c = testing::toy_cohort(60, 3, 1);
  TrainConfig cfg;
  cfg.model = ModelKind::logistic;
  cfg.epochs = 3;
  cfg.lr_model = 1e-2;
  cfg.lr_a = 1e-2;
  cfg.k_neighbors = 8;
  cfg.batch_size = 16;
  const auto cv = cross_validate(c, cfg, CvOptions{3, 2});
  CHECK(cv.folds.size() == 3);
  CHECK(cv.pooled_test().size() == 60);
  CHECK(cv.eigenvalues.size() == 60);
  CHECK(cv.mean_bacc() >= 0.0);
  CHECK(cv.std_bacc() >= 0.0);
  const auto again = cross_validate(c, cfg, CvOptions{3, 1});
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(cv.pooled_test()[i].probability == again.pooled_test()[i].probability);
    CHECK(cv.pooled_test()[i].weight == again.pooled_test()[i].weight);
  }

  const auto cells = sweep(c, {5, 10}, {0.5, 1.0}, cfg, CvOptions{3, 2});
  REQUIRE(cells.size() == 4);
  CHECK(cells[1].k == 5);
  CHECK(cells[1].c == 1.0);
  CHECK(cells[3].seed == cfg.seed + 3);
  for (const auto& cell : cells) CHECK(std::isfinite(cell.gap_percent));
}
