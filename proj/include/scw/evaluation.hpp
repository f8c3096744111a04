#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "scw/cohort.hpp"
#include "scw/training.hpp"

namespace scw {

inline constexpr double kDecisionThreshold = 0.5;

/// Mean of sensitivity and specificity at threshold 0.5. DataError unless
/// both classes occur among the labels.
double balanced_accuracy(std::span<const int> labels, std::span<const double> probabilities);
double balanced_accuracy_binary(std::span<const int> labels, std::span<const int> predictions);

/// F1 of the positive class; 0 when precision + recall is 0.
double f1_score(std::span<const int> labels, std::span<const double> probabilities);
double f1_score_binary(std::span<const int> labels, std::span<const int> predictions);

/// Fold id in [0, k) per sample. Each class is shuffled and dealt round-robin,
/// continuing across classes, so fold sizes differ by at most one and class
/// counts per fold by at most one.
std::vector<std::size_t> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct MannWhitney {
  double u = 0.0;         // min(U_a, U_b)
  double u_a = 0.0;       // pairs where a wins, ties count one half
  double p_value = 1.0;   // two-sided, normal approximation
  double z = 0.0;
};

/// Two-sided Mann-Whitney U test with midranks, tie-corrected variance and a
/// 0.5 continuity correction. All-identical input gives p = 1.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Test-set outcome of one sample.
struct SamplePrediction {
  std::size_t index = 0;  // row in the cohort
  std::string subject_id;
  std::size_t fold = 0;
  int label = 0;
  double probability = 0.5;
  double weight = 1.0;
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<SamplePrediction> test;
  std::vector<double> train_weights;  // aligned with train_rows
  std::vector<std::size_t> train_rows;
  double bacc = 0.0;
  double f1 = 0.0;
  nlohmann::json manifest;
  std::shared_ptr<const Classifier> model;
};

struct MedianSplit {
  double median_weight = 0.0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  double bacc_high = 0.0;
  double bacc_low = 0.0;
  double gap_points = 0.0;   // 100 * (bacc_high - bacc_low)
  double gap_percent = 0.0;  // 100 * |bacc_high - bacc_low| / bacc_low
  bool degenerate = false;
};

/// Pools the given test predictions, splits at the median weight (ties go to
/// the low side) and compares BACC of the two sides.
MedianSplit median_split_gap(std::span<const SamplePrediction> pooled);

struct SubcohortGroup {
  std::string label;
  std::size_t n = 0;
  double mean_weight = 0.0;
  std::optional<double> bacc;  // absent when the group holds one class only
  double lower = 0.0;          // factor range covered
  double upper = 0.0;
};

struct PairwiseTest {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  MannWhitney test;
};

struct SubcohortReport {
  std::string factor;
  bool binary = false;
  std::vector<SubcohortGroup> groups;
  std::vector<PairwiseTest> tests;
  std::vector<std::size_t> assignment;  // group per pooled sample
};

/// Groups samples by one factor (two groups for binary factors, equal-count
/// tertiles otherwise, ties to the lower bin) and compares weights across
/// groups with pairwise U tests.
SubcohortReport factor_subcohort_table(std::span<const SamplePrediction> pooled,
                                       std::span<const double> factor_values,
                                       const std::string& factor_name);

/// Tertile bin per value: equal-count bins with cut points at ranks
/// ceil(n/3) and ceil(2n/3); values equal to a cut go to the lower bin.
std::vector<std::size_t> tertile_bins(std::span<const double> values);

struct CvOptions {
  std::size_t folds = 5;
  std::size_t workers = 0;  // 0: hardware concurrency
};

struct CvResult {
  TrainConfig config;
  std::vector<FoldResult> folds;
  std::vector<std::size_t> fold_of;  // per sample
  std::shared_ptr<const SpectralBasis> basis;
  std::vector<double> eigenvalues;   // full Laplacian spectrum, empty for none/jtt

  std::vector<SamplePrediction> pooled_test() const;
  double mean_bacc() const;
  double std_bacc() const;
  double mean_f1() const;
  double std_f1() const;
};

/// Builds the factor graph over all samples once, then runs k-fold
/// stratified cross-validation with one independent training run per fold.
CvResult cross_validate(const Cohort& cohort, const TrainConfig& cfg, const CvOptions& opts = {});
// Reuses a basis built beforehand (it must cover every sample of the cohort).
CvResult cross_validate(const Cohort& cohort, const TrainConfig& cfg, const CvOptions& opts,
                        std::shared_ptr<const SpectralBasis> basis, std::vector<double> eigenvalues);

/// Graph stage on its own: standardize, kNN graph, Laplacian spectrum.
struct GraphArtifacts {
  FactorTable standardized;
  FactorGraph graph;
  Matrix laplacian;
  LaplacianSpectrum spectrum;
  std::shared_ptr<const SpectralBasis> basis;
};
GraphArtifacts build_graph_artifacts(const FactorTable& raw, std::size_t k, std::optional<std::size_t> m);

struct SweepCell {
  std::size_t k = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
  double gap_percent = 0.0;
  double gap_points = 0.0;
  double mean_bacc = 0.0;
  bool degenerate = false;
};

inline const std::vector<std::size_t> kDefaultSweepK = {10, 30, 50, 75, 100};
inline const std::vector<double> kDefaultSweepC = {0.5, 0.65, 0.7, 0.75, 1.0};

/// Full factorial K x c grid of spectral-scheme CV runs; cell i uses seed
/// base_seed + i (row-major over K then c).
std::vector<SweepCell> sweep(const Cohort& cohort, const std::vector<std::size_t>& ks,
                             const std::vector<double>& cs, const TrainConfig& base,
                             const CvOptions& opts = {});

/// Parallel map over [0, n) with each index run exactly once; results are
/// collected by index so output order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace scw
