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
#include "scw/predictor.hpp"
#include "scw/weight_field.hpp"

namespace scw {

enum class Scheme { none, spectral, only_graph, jtt };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);  // UsageError on unknown names

struct TrainConfig {
  Scheme scheme = Scheme::spectral;
  std::size_t epochs = 100;
  double lr_model = 1e-4;
  double lr_a = 1e-5;
  std::size_t batch_size = 32;
  std::size_t k_neighbors = 50;
  double centering_c = 0.65;
  std::optional<std::size_t> m_basis;  // nullopt: change-point selection
  double jtt_lambda = 2.0;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::gru;
  std::size_t hidden = 64;
  std::size_t fc = 32;

  void validate() const;  // UsageError on violations
};

nlohmann::json to_json(const TrainConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

class AdamState {
public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  explicit AdamState(std::size_t dim) : m_(dim, 0.0), v_(dim, 0.0) {}

  std::size_t dim() const { return m_.size(); }
  std::uint64_t steps() const { return t_; }

  /// One bias-corrected Adam update of `params` in place.
  void step(std::span<double> params, std::span<const double> grads, double lr);

private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// Value and gradients of
///   scale * ( sum_i w_i l_i + sum_i max(0, -w_i) )
/// over `rows`, where l_i is the BCE of sample i. The model gradient treats
/// w_i as constants; the coefficient gradient treats l_i as constants.
struct ObjectiveGradient {
  double objective = 0.0;
  std::vector<double> grad_model;
  std::vector<double> grad_a;  // empty without a weight field
  std::vector<double> losses;  // unscaled l_i per row
};

ObjectiveGradient weighted_objective(const Classifier& model, const CohortDataset& data,
                                     std::span<const std::size_t> rows,
                                     const WeightField& field, double scale = 1.0);

// Same with fixed per-sample weights indexed by global sample index.
ObjectiveGradient weighted_objective(const Classifier& model, const CohortDataset& data,
                                     std::span<const std::size_t> rows,
                                     std::span<const double> sample_weights, double scale = 1.0);

struct TrainHooks {
  std::function<void(std::size_t epoch, const Classifier&, const WeightField*)> on_epoch;
};

struct TrainResult {
  std::unique_ptr<Classifier> model;
  std::optional<WeightField> field;    // spectral and only_graph
  std::vector<double> sample_weights;  // all N samples; test rows carry the inferred weight
  std::vector<double> epoch_objectives;  // mean per-sample objective seen over each epoch
  double initial_objective = 0.0;        // full training set, mean per sample
  double final_objective = 0.0;
};

TrainResult train_spectral(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                           const TrainConfig& cfg, const Split& split, const TrainHooks& hooks = {});
TrainResult train_only_graph(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                             const TrainConfig& cfg, const Split& split, const TrainHooks& hooks = {});
TrainResult train_baseline_none(const CohortDataset& data, const TrainConfig& cfg, const Split& split,
                                const TrainHooks& hooks = {});
/// Stage 1 trains unweighted; stage 2 retrains from a fresh seed+1 model with
/// weight jtt_lambda on every training sample stage 1 got wrong at 0.5.
TrainResult train_jtt(const CohortDataset& data, const TrainConfig& cfg, const Split& split,
                      const TrainHooks& hooks = {});

/// Dispatch on cfg.scheme. `basis` may be null for none and jtt.
TrainResult train(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                  const TrainConfig& cfg, const Split& split, const TrainHooks& hooks = {});

nlohmann::json run_manifest(const TrainConfig& cfg, const TrainResult& result, std::size_t fold);

}  // namespace scw
