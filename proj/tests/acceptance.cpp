// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "scw/evaluation.hpp"
#include "scw/synth_cohort.hpp"
#include "scw/training.hpp"
#include "support.hpp"

using namespace scw;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// 1. Orthonormality, zero column sums and eigen-residuals of the basis.
Outcome spectral_identities() {
  const auto t0 = Clock::now();
  Rng rng = substream(2024, "acceptance-tables");
  double worst_orth = 0.0, worst_sum = 0.0, worst_res = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 50 + static_cast<std::size_t>(rng() % 351);
    const std::size_t k = t % 2 == 0 ? 10 : 50;
    const auto raw = testing::random_factors(n, 3, rng());
    const auto lap = laplacian(build_graph(standardize(raw), k));
    const auto spectrum = laplacian_spectrum(lap);
    const auto basis = spectral_basis(spectrum, spectrum.eigenvalues.size() - spectrum.null_dimension);
    const Matrix& e = basis.basis;
    const Matrix gram = matmul(e.transposed(), e);
    for (std::size_t i = 0; i < gram.rows(); ++i)
      for (std::size_t j = 0; j < gram.cols(); ++j)
        worst_orth = std::max(worst_orth, std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)));
    const Matrix le = matmul(lap, e);
    for (std::size_t j = 0; j < e.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum += e(i, j);
        worst_res = std::max(worst_res, std::abs(le(i, j) - basis.eigenvalues[j] * e(i, j)));
      }
      worst_sum = std::max(worst_sum, std::abs(sum));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_orth < 1e-8 && worst_sum < 1e-8 && worst_res < 1e-7 && secs < 60.0,
          fmt("|E'E-I|=%.2e colsum=%.2e |Le-le|=%.2e in %.1fs", worst_orth, worst_sum, worst_res, secs)};
}

// 2. Exact centering and the smoothness identity.
Outcome centering_identity() {
  const std::size_t n = 150;
  const auto lap = laplacian(build_graph(standardize(testing::random_factors(n, 3, 77)), 20));
  auto basis = std::make_shared<const SpectralBasis>(spectral_basis(lap, 25));
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < n; ++i) (i % 5 ? train : test).push_back(i);
  Rng rng = substream(77, "coefficients");
  double worst_sum = 0.0, worst_quad = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c = -3.0 + 6.0 * uniform01(rng);
    std::vector<double> a(basis->m_count());
    for (double& v : a) v = 2.0 * testing::normal(rng);
    WeightField f(basis, c, train, test);
    f.set_coeffs(a);
    const auto w = f.all_weights();
    double sum = 0.0;
    for (double x : w) sum += x;
    worst_sum = std::max(worst_sum, std::abs(sum - static_cast<double>(n) * c));
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = w[i] - c;
    double expect = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) expect += basis->eigenvalues[j] * a[j] * a[j];
    worst_quad = std::max(worst_quad, std::abs(dot(dev, matvec(lap, dev)) - expect));
  }
  return {worst_sum < 1e-10 && worst_quad < 1e-8, fmt("|sum w - Nc|=%.2e |quad - sum la^2|=%.2e", worst_sum, worst_quad)};
}

// 3. Joint analytic gradient (model and coefficients) against central differences.
Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const auto cohort = testing::toy_cohort(6, 4, 5);
  const auto basis = testing::basis_for(cohort.factors, 3, 3);
  WeightField field(basis, 0.7, {0, 1, 2, 3, 4, 5}, {});
  field.set_coeffs({0.5, -0.4, 0.3});
  Rng rng = substream(5, "init");
  GruClassifier model(GruShape{4, 5, 3}, rng);
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
  const auto og = weighted_objective(model, cohort.data, rows, field);
  const auto objective = [&] { return weighted_objective(model, cohort.data, rows, field).objective; };

  const double h = 1e-5;  // near the round-off optimum for central differences
  double worst = 0.0;
  std::size_t coords = 0;
  auto probe = [&](double& x, double analytic) {
    const double keep = x;
    x = keep + h;
    const double up = objective();
    x = keep - h;
    const double down = objective();
    x = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6}));
    ++coords;
  };
  auto p = model.parameters();
  for (std::size_t k = 0; k < p.size(); ++k) probe(p[k], og.grad_model[k]);
  auto a = field.coeffs();
  for (std::size_t j = 0; j < a.size(); ++j) probe(a[j], og.grad_a[j]);
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("max rel err %.2e over %.0f coordinates in %.2fs", worst, static_cast<double>(coords), secs)};
}

// 4. BACC, F1 and U against enumeration.
Outcome metric_oracles() {
  double worst = 0.0;
  std::size_t instances = 0, u_mismatch = 0;
  for (std::size_t n = 1; n <= 8; ++n)
    for (unsigned yb = 0; yb < (1u << n); ++yb)
      for (unsigned pb = 0; pb < (1u << n); ++pb) {
        std::vector<int> y(n), q(n);
        double tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = (yb >> i) & 1u;
          q[i] = (pb >> i) & 1u;
          tp += y[i] && q[i];
          tn += !y[i] && !q[i];
          fp += !y[i] && q[i];
          fn += y[i] && !q[i];
        }
        const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
        worst = std::max(worst, std::abs(f1_score_binary(y, q) - f1));
        if (tp + fn > 0 && tn + fp > 0) {
          const double bacc = 0.5 * (tp / (tp + fn) + tn / (tn + fp));
          worst = std::max(worst, std::abs(balanced_accuracy_binary(y, q) - bacc));
        }
        ++instances;
      }
  // Every pair of value vectors over {1..6} with group sizes up to 6 would be
  // 6^12 cases; U depends only on the multisets, so enumerate those.
  std::vector<std::vector<std::vector<double>>> sets(7);
  std::function<void(std::size_t, double, std::vector<double>&)> grow = [&](std::size_t size, double lo,
                                                                            std::vector<double>& cur) {
    if (cur.size() == size) {
      sets[size].push_back(cur);
      return;
    }
    for (double v = lo; v <= 6.0; v += 1.0) {
      cur.push_back(v);
      grow(size, v, cur);
      cur.pop_back();
    }
  };
  for (std::size_t s = 1; s <= 6; ++s) {
    std::vector<double> cur;
    grow(s, 1.0, cur);
  }
  std::size_t u_cases = 0;
  for (std::size_t na = 1; na <= 6; ++na)
    for (std::size_t nb = 1; nb <= 6; ++nb)
      for (const auto& a : sets[na])
        for (const auto& b : sets[nb]) {
          double wins = 0.0;
          for (double x : a)
            for (double z : b) wins += x > z ? 1.0 : (x == z ? 0.5 : 0.0);
          const auto r = mann_whitney_u(a, b);
          u_mismatch += r.u_a != wins || r.u != std::min(wins, static_cast<double>(na * nb) - wins);
          ++u_cases;
        }
  return {worst <= 1e-12 && u_mismatch == 0,
          fmt("%.0f labelings max err %.1e; %.0f U cases, %.0f mismatches", static_cast<double>(instances), worst,
              static_cast<double>(u_cases), static_cast<double>(u_mismatch))};
}

// 5. Scrambled held-out rows leave training untouched.
Outcome transductive_isolation() {
  auto cohort = testing::toy_cohort(80, 5, 9);
  const auto basis = testing::basis_for(cohort.factors, 10, std::nullopt);
  const auto split = testing::alternate_split(80, 5);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.lr_model = 1e-3;
  cfg.lr_a = 1e-2;
  cfg.hidden = 8;
  cfg.fc = 4;
  cfg.seed = 9;
  const auto a = train_spectral(cohort.data, basis, cfg, split);
  Rng rng = substream(9, "scramble");
  for (std::size_t i : split.test) {
    auto& s = cohort.data.subjects[i];
    s.label = static_cast<int>(rng() % 2);
    s.visits = Matrix(1 + rng() % 5, 5);
    for (std::size_t t = 0; t < s.visits.rows(); ++t)
      for (std::size_t j = 0; j < 5; ++j) s.visits(t, j) = 50.0 * testing::normal(rng);
  }
  const auto b = train_spectral(cohort.data, basis, cfg, split);
  const bool same_params = std::equal(a.model->parameters().begin(), a.model->parameters().end(),
                                      b.model->parameters().begin(), b.model->parameters().end());
  bool same_test_weights = true;
  for (std::size_t i : split.test) same_test_weights = same_test_weights && a.sample_weights[i] == b.sample_weights[i];
  bool moved = false;
  for (double x : a.field->coeffs()) moved = moved || x != 0.0;
  return {same_params && same_test_weights && moved,
          std::string("parameters ") + (same_params ? "identical" : "DIFFER") + ", test weights " +
              (same_test_weights ? "identical" : "DIFFER") + (moved ? "" : ", coefficients never moved")};
}

// 6. End-to-end recovery of the noisy sub-cohort on the default synthetic cohort.
Outcome heterogeneity_recovery() {
  const auto t0 = Clock::now();
  const auto synth = generate(SynthSpec{});
  TrainConfig cfg;  // spectral, K = 50, c = 0.65, M auto, 100 epochs
  const auto spectral = cross_validate(synth.cohort, cfg, CvOptions{5, 0});
  auto none_cfg = cfg;
  none_cfg.scheme = Scheme::none;
  const auto none = cross_validate(synth.cohort, none_cfg, CvOptions{5, 0});

  const auto pooled = spectral.pooled_test();
  std::vector<double> low_noise, high_noise;
  for (const auto& s : pooled) (synth.high_noise[s.index] ? high_noise : low_noise).push_back(s.weight);
  const auto u = mann_whitney_u(low_noise, high_noise);
  const auto split = median_split_gap(pooled);
  const double bacc_s = 100.0 * spectral.mean_bacc();
  const double bacc_n = 100.0 * none.mean_bacc();
  const bool a = u.p_value < 0.01;
  const bool b = !split.degenerate && split.gap_points >= 5.0;
  const bool c = bacc_s >= bacc_n - 1.0;
  const double secs = seconds_since(t0);
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "(a) U p=%.2e%s (b) high/low %.1f/%.1f gap %.1f pts%s (c) BACC %.1f vs none %.1f%s; %.0fs",
                u.p_value, a ? "" : " FAIL", 100.0 * split.bacc_high, 100.0 * split.bacc_low, split.gap_points,
                b ? "" : " FAIL", bacc_s, bacc_n, c ? "" : " FAIL", secs);
  return {a && b && c && secs < 600.0, buf};
}

// 7. JTT weight values, frozen only_graph weights, none == spectral(M=0, c=1).
Outcome baseline_contracts() {
  const auto cohort = testing::toy_cohort(60, 4, 13, 0.6);
  const auto split = testing::alternate_split(60);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.lr_model = 1e-3;
  cfg.hidden = 8;
  cfg.fc = 4;
  cfg.seed = 13;

  auto jtt_cfg = cfg;
  jtt_cfg.scheme = Scheme::jtt;
  jtt_cfg.jtt_lambda = 2.0;
  const auto jtt = train_jtt(cohort.data, jtt_cfg, split);
  std::set<double> values(jtt.sample_weights.begin(), jtt.sample_weights.end());
  bool jtt_ok = true;
  for (double v : values) jtt_ok = jtt_ok && (v == 1.0 || v == 2.0);

  const auto basis = testing::basis_for(cohort.factors, 8, 5);
  std::vector<std::vector<double>> per_epoch;
  TrainHooks hooks{[&](std::size_t, const Classifier&, const WeightField* f) { per_epoch.push_back(f->all_weights()); }};
  auto og_cfg = cfg;
  og_cfg.scheme = Scheme::only_graph;
  train_only_graph(cohort.data, basis, og_cfg, split, hooks);
  bool frozen = per_epoch.size() == cfg.epochs;
  for (const auto& w : per_epoch) frozen = frozen && w == per_epoch.front();

  const auto empty = testing::basis_for(cohort.factors, 8, 0);
  auto sp_cfg = cfg;
  sp_cfg.centering_c = 1.0;
  std::vector<std::vector<double>> ta, tb;
  TrainHooks ha{[&](std::size_t, const Classifier& m, const WeightField*) {
    ta.emplace_back(m.parameters().begin(), m.parameters().end());
  }};
  TrainHooks hb{[&](std::size_t, const Classifier& m, const WeightField*) {
    tb.emplace_back(m.parameters().begin(), m.parameters().end());
  }};
  train_spectral(cohort.data, empty, sp_cfg, split, ha);
  train_baseline_none(cohort.data, cfg, split, hb);
  const bool same = ta == tb && !ta.empty();

  return {jtt_ok && frozen && same, std::string("jtt weights ") + (jtt_ok ? "in {1,2}" : "OUT OF SET") +
                                        (values.count(2.0) ? " (some up-weighted)" : " (none up-weighted)") +
                                        ", only_graph " + (frozen ? "frozen" : "DRIFTED") +
                                        ", none vs spectral(M=0,c=1) " + (same ? "identical" : "DIFFER")};
}

// 8. 5 x 5 sweep grid: complete, finite and reproducible.
Outcome sweep_shape() {
  const auto t0 = Clock::now();
  const auto synth = generate(SynthSpec{});
  TrainConfig cfg;
  cfg.model = ModelKind::logistic;
  cfg.epochs = 20;
  cfg.lr_model = 1e-2;
  cfg.lr_a = 1e-3;
  cfg.seed = 5;
  const auto a = sweep(synth.cohort, kDefaultSweepK, kDefaultSweepC, cfg);
  const auto b = sweep(synth.cohort, kDefaultSweepK, kDefaultSweepC, cfg);
  bool finite = a.size() == 25;
  bool same = a.size() == b.size();
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    finite = finite && std::isfinite(a[i].gap_percent) && std::isfinite(a[i].gap_points);
    same = same && a[i].gap_percent == b[i].gap_percent && a[i].mean_bacc == b[i].mean_bacc && a[i].seed == b[i].seed;
    degenerate += a[i].degenerate;
  }
  return {finite && same, fmt("%.0f cells, finite=%.0f, reproducible=%.0f, degenerate cells %.0f", static_cast<double>(a.size()),
                              finite, same, static_cast<double>(degenerate)) +
                              fmt(" in %.0fs", seconds_since(t0))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 spectral identities", spectral_identities},
      {"2 centering and smoothness identities", centering_identity},
      {"3 joint gradient oracle", gradient_oracle},
      {"4 metric oracles", metric_oracles},
      {"5 transductive isolation", transductive_isolation},
      {"6 synthetic heterogeneity recovery", heterogeneity_recovery},
      {"7 baseline contracts", baseline_contracts},
      {"8 sweep grid shape", sweep_shape},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
