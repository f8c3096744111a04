#include "scw/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "scw/errors.hpp"
#include "scw/rng.hpp"

namespace scw {

namespace {

std::vector<int> threshold(std::span<const double> probabilities) {
  std::vector<int> out;
  out.reserve(probabilities.size());
  for (double p : probabilities) out.push_back(p >= kDecisionThreshold ? 1 : 0);
  return out;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw UsageError("metrics: labels and predictions differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      predictions[i] == 1 ? ++c.tp : ++c.fn;
    } else {
      predictions[i] == 1 ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

}  // namespace

double balanced_accuracy_binary(std::span<const int> labels, std::span<const int> predictions) {
  const auto c = confusion(labels, predictions);
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    throw DataError("balanced_accuracy: both classes must be present among the labels");
  }
  const double sens = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double spec = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return 0.5 * (sens + spec);
}

double balanced_accuracy(std::span<const int> labels, std::span<const double> probabilities) {
  return balanced_accuracy_binary(labels, threshold(probabilities));
}

double f1_score_binary(std::span<const int> labels, std::span<const int> predictions) {
  const auto c = confusion(labels, predictions);
  // 2PR/(P+R) == 2TP / (2TP + FP + FN); zero when TP is zero.
  if (c.tp == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

double f1_score(std::span<const int> labels, std::span<const double> probabilities) {
  return f1_score_binary(labels, threshold(probabilities));
}

std::vector<std::size_t> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("stratified_kfold: need k >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < k) {
      throw DataError("stratified_kfold: class " + std::to_string(label) + " has " +
                      std::to_string(rows.size()) + " samples, fewer than k=" + std::to_string(k));
    }
  }
  if (by_class.empty()) throw DataError("stratified_kfold: no samples");

  Rng rng = substream(seed, "folds");
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t position = 0;
  for (auto& [label, rows] : by_class) {
    shuffle_in_place(rows, rng);
    for (std::size_t r : rows) fold[r] = position++ % k;
  }
  return fold;
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw UsageError("mann_whitney_u: both groups must be non-empty");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;

  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (pooled[t].second == 0) rank_sum_a += midrank;
    const double tie = static_cast<double>(j - i);
    tie_term += tie * tie * tie - tie;
    i = j;
  }

  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb), dn = static_cast<double>(n);
  MannWhitney out;
  out.u_a = rank_sum_a - dna * (dna + 1.0) / 2.0;
  out.u = std::min(out.u_a, dna * dnb - out.u_a);

  const double mean = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    out.z = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const double numerator = std::max(0.0, std::abs(out.u_a - mean) - 0.5);
  out.z = numerator / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(out.z / std::sqrt(2.0)));
  return out;
}

namespace {

std::optional<double> lenient_bacc(const std::vector<int>& labels, const std::vector<double>& probs) {
  const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has0 || !has1) return std::nullopt;
  return balanced_accuracy(labels, probs);
}

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

MedianSplit median_split_gap(std::span<const SamplePrediction> pooled) {
  MedianSplit out;
  if (pooled.empty()) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> weights;
  for (const auto& s : pooled) weights.push_back(s.weight);
  out.median_weight = median_of(weights);

  std::vector<int> hy, ly;
  std::vector<double> hp, lp;
  for (const auto& s : pooled) {
    if (s.weight > out.median_weight) {
      hy.push_back(s.label);
      hp.push_back(s.probability);
    } else {
      ly.push_back(s.label);
      lp.push_back(s.probability);
    }
  }
  out.n_high = hy.size();
  out.n_low = ly.size();
  const double high = hy.empty() ? kUndefined : lenient_bacc(hy, hp).value_or(kUndefined);
  const double low = ly.empty() ? kUndefined : lenient_bacc(ly, lp).value_or(kUndefined);
  if (std::isnan(high) || std::isnan(low) || low <= 0.0) {
    out.degenerate = true;
    out.bacc_high = std::isnan(high) ? 0.0 : high;
    out.bacc_low = std::isnan(low) ? 0.0 : low;
    return out;
  }
  out.bacc_high = high;
  out.bacc_low = low;
  out.gap_points = 100.0 * (high - low);
  out.gap_percent = 100.0 * std::abs(high - low) / low;
  return out;
}

std::vector<std::size_t> tertile_bins(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> bins(n, 0);
  if (n == 0) return bins;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double cut1 = sorted[(n + 2) / 3 - 1];
  const double cut2 = sorted[(2 * n + 2) / 3 - 1];
  for (std::size_t i = 0; i < n; ++i) {
    bins[i] = values[i] <= cut1 ? 0 : (values[i] <= cut2 ? 1 : 2);
  }
  return bins;
}

SubcohortReport factor_subcohort_table(std::span<const SamplePrediction> pooled,
                                       std::span<const double> factor_values,
                                       const std::string& factor_name) {
  if (pooled.size() != factor_values.size()) {
    throw UsageError("factor_subcohort_table: one factor value per sample required");
  }
  SubcohortReport rep;
  rep.factor = factor_name;
  const std::set<double> distinct(factor_values.begin(), factor_values.end());
  rep.binary = distinct.size() <= 2;

  std::size_t n_groups = 0;
  std::vector<std::string> names;
  if (rep.binary) {
    const std::vector<double> levels(distinct.begin(), distinct.end());
    for (double v : factor_values) {
      rep.assignment.push_back(static_cast<std::size_t>(
          std::lower_bound(levels.begin(), levels.end(), v) - levels.begin()));
    }
    n_groups = levels.size();
    for (double v : levels) names.push_back(factor_name + "=" + format_double(v));
  } else {
    rep.assignment = tertile_bins(factor_values);
    n_groups = 3;
    names = {factor_name + ":low", factor_name + ":mid", factor_name + ":high"};
  }

  std::vector<std::vector<double>> group_weights(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    std::vector<int> y;
    std::vector<double> p;
    SubcohortGroup grp;
    grp.label = names[g];
    grp.lower = std::numeric_limits<double>::infinity();
    grp.upper = -std::numeric_limits<double>::infinity();
    double wsum = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      if (rep.assignment[i] != g) continue;
      ++grp.n;
      wsum += pooled[i].weight;
      group_weights[g].push_back(pooled[i].weight);
      y.push_back(pooled[i].label);
      p.push_back(pooled[i].probability);
      grp.lower = std::min(grp.lower, factor_values[i]);
      grp.upper = std::max(grp.upper, factor_values[i]);
    }
    if (grp.n > 0) {
      grp.mean_weight = wsum / static_cast<double>(grp.n);
      grp.bacc = lenient_bacc(y, p);
    } else {
      grp.lower = grp.upper = 0.0;
    }
    rep.groups.push_back(grp);
  }
  for (std::size_t a = 0; a < n_groups; ++a) {
    for (std::size_t b = a + 1; b < n_groups; ++b) {
      if (group_weights[a].empty() || group_weights[b].empty()) continue;
      rep.tests.push_back({a, b, mann_whitney_u(group_weights[a], group_weights[b])});
    }
  }
  return rep;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GraphArtifacts build_graph_artifacts(const FactorTable& raw, std::size_t k, std::optional<std::size_t> m) {
  GraphArtifacts g;
  g.standardized = standardize(raw);
  g.graph = build_graph(g.standardized, k);
  g.laplacian = laplacian(g.graph);
  g.spectrum = laplacian_spectrum(g.laplacian);
  g.basis = std::make_shared<const SpectralBasis>(spectral_basis(g.spectrum, m));
  return g;
}

std::vector<SamplePrediction> CvResult::pooled_test() const {
  std::vector<SamplePrediction> out;
  for (const auto& f : folds) out.insert(out.end(), f.test.begin(), f.test.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation across folds.
double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

template <typename F>
std::vector<double> per_fold(const std::vector<FoldResult>& folds, F f) {
  std::vector<double> v;
  for (const auto& r : folds) v.push_back(f(r));
  return v;
}

}  // namespace

double CvResult::mean_bacc() const { return mean_of(per_fold(folds, [](auto& f) { return f.bacc; })); }
double CvResult::std_bacc() const { return std_of(per_fold(folds, [](auto& f) { return f.bacc; })); }
double CvResult::mean_f1() const { return mean_of(per_fold(folds, [](auto& f) { return f.f1; })); }
double CvResult::std_f1() const { return std_of(per_fold(folds, [](auto& f) { return f.f1; })); }

CvResult cross_validate(const Cohort& cohort, const TrainConfig& cfg, const CvOptions& opts,
                        std::shared_ptr<const SpectralBasis> basis, std::vector<double> eigenvalues) {
  cfg.validate();
  const auto& data = cohort.data;
  const auto labels = data.labels();

  CvResult cv;
  cv.config = cfg;
  cv.basis = basis;
  cv.eigenvalues = std::move(eigenvalues);
  cv.fold_of = stratified_kfold(labels, opts.folds, cfg.seed);
  cv.folds.resize(opts.folds);

  parallel_for(opts.folds, opts.workers, [&](std::size_t f) {
    Split split;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
      (cv.fold_of[i] == f ? split.test : split.train).push_back(i);
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = substream(cfg.seed, "fold" + std::to_string(f))();
    const auto result = train(data, basis, fold_cfg, split);

    FoldResult& fr = cv.folds[f];
    fr.fold = f;
    fr.train_rows = split.train;
    for (std::size_t r : split.train) fr.train_weights.push_back(result.sample_weights[r]);
    std::vector<int> y;
    std::vector<double> p;
    for (std::size_t r : split.test) {
      const auto& s = data.subjects[r];
      SamplePrediction sp{r, s.id, f, s.label, result.model->predict(s.visits), result.sample_weights[r]};
      y.push_back(sp.label);
      p.push_back(sp.probability);
      fr.test.push_back(std::move(sp));
    }
    fr.bacc = balanced_accuracy(y, p);
    fr.f1 = f1_score(y, p);
    fr.manifest = run_manifest(fold_cfg, result, f);
    fr.model = std::shared_ptr<const Classifier>(result.model->clone());
  });
  return cv;
}

CvResult cross_validate(const Cohort& cohort, const TrainConfig& cfg, const CvOptions& opts) {
  if (cfg.scheme == Scheme::spectral || cfg.scheme == Scheme::only_graph) {
    auto g = build_graph_artifacts(cohort.factors, cfg.k_neighbors, cfg.m_basis);
    return cross_validate(cohort, cfg, opts, g.basis, g.spectrum.eigenvalues);
  }
  return cross_validate(cohort, cfg, opts, nullptr, {});
}

std::vector<SweepCell> sweep(const Cohort& cohort, const std::vector<std::size_t>& ks,
                             const std::vector<double>& cs, const TrainConfig& base,
                             const CvOptions& opts) {
  if (ks.empty() || cs.empty()) throw UsageError("sweep: empty K or c grid");
  std::vector<SweepCell> cells(ks.size() * cs.size());
  std::vector<GraphArtifacts> graphs(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    graphs[ki] = build_graph_artifacts(cohort.factors, ks[ki], base.m_basis);
  }
  // Folds run sequentially inside a cell; cells are the unit of parallelism.
  CvOptions inner = opts;
  inner.workers = 1;
  parallel_for(cells.size(), opts.workers, [&](std::size_t i) {
    const std::size_t ki = i / cs.size();
    const std::size_t ci = i % cs.size();
    TrainConfig cfg = base;
    cfg.scheme = Scheme::spectral;
    cfg.k_neighbors = ks[ki];
    cfg.centering_c = cs[ci];
    cfg.seed = base.seed + i;
    const auto cv = cross_validate(cohort, cfg, inner, graphs[ki].basis, {});
    const auto split = median_split_gap(cv.pooled_test());
    cells[i] = SweepCell{ks[ki], cs[ci], cfg.seed, split.gap_percent, split.gap_points,
                         cv.mean_bacc(), split.degenerate};
  });
  return cells;
}

}  // namespace scw
