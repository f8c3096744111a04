#include "scw/training.hpp"

#include <algorithm>
#include <cmath>

#include "scw/errors.hpp"
#include "scw/rng.hpp"

namespace scw {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::none: return "none";
    case Scheme::spectral: return "spectral";
    case Scheme::only_graph: return "only_graph";
    case Scheme::jtt: return "jtt";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "none") return Scheme::none;
  if (name == "spectral") return Scheme::spectral;
  if (name == "only_graph") return Scheme::only_graph;
  if (name == "jtt") return Scheme::jtt;
  throw UsageError("unknown scheme '" + name + "' (expected none, spectral, only_graph or jtt)");
}

void TrainConfig::validate() const {
  if (!(lr_model > 0.0)) throw UsageError("lr_model must be > 0");
  if (!(lr_a >= 0.0)) throw UsageError("lr_a must be >= 0");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(jtt_lambda >= 1.0)) throw UsageError("jtt_lambda must be >= 1");
  if (!std::isfinite(centering_c)) throw UsageError("centering_c must be finite");
  if (hidden < 1 || fc < 1) throw UsageError("hidden sizes must be >= 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["scheme"] = to_string(cfg.scheme);
  j["epochs"] = cfg.epochs;
  j["lr_model"] = cfg.lr_model;
  j["lr_a"] = cfg.lr_a;
  j["batch_size"] = cfg.batch_size;
  j["k_neighbors"] = cfg.k_neighbors;
  j["centering_c"] = cfg.centering_c;
  j["m_basis"] = cfg.m_basis ? nlohmann::json(*cfg.m_basis) : nlohmann::json("auto");
  j["jtt_lambda"] = cfg.jtt_lambda;
  j["seed"] = cfg.seed;
  j["model"] = cfg.model == ModelKind::gru ? "gru" : "logistic";
  j["hidden"] = cfg.hidden;
  j["fc"] = cfg.fc;
  return j;
}

void AdamState::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("AdamState: dimension mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
  }
}

namespace {

// Loss weights come either from a weight field (possibly learnable) or from
// a fixed per-sample vector.
struct WeightSource {
  WeightField* field = nullptr;
  bool learn_coeffs = false;
  std::span<const double> fixed;

  double weight(std::size_t row) const { return field ? field->weight(row) : fixed[row]; }
};

ObjectiveGradient objective_impl(const Classifier& model, const CohortDataset& data,
                                 std::span<const std::size_t> rows, const WeightSource& src,
                                 double scale) {
  ObjectiveGradient out;
  out.grad_model.assign(model.n_params(), 0.0);
  out.losses.reserve(rows.size());
  double weighted = 0.0;
  double penalty = 0.0;
  for (std::size_t row : rows) {
    if (row >= data.n_samples()) throw UsageError("objective: row out of range");
    const double w = src.weight(row);
    const auto& s = data.subjects[row];
    const double loss = model.loss_and_gradient(s.visits, s.label, scale * w, out.grad_model);
    out.losses.push_back(loss);
    weighted += w * loss;
    penalty += std::max(0.0, -w);
  }
  out.objective = scale * (weighted + penalty);
  if (src.field) {
    out.grad_a = src.field->grad_a(rows, out.losses);
    for (double& g : out.grad_a) g *= scale;
  }
  return out;
}

double mean_objective(const Classifier& model, const CohortDataset& data,
                      std::span<const std::size_t> rows, const WeightSource& src) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t row : rows) {
    const double w = src.weight(row);
    const auto& s = data.subjects[row];
    total += w * bce_loss(model.predict(s.visits), s.label) + std::max(0.0, -w);
  }
  return total / static_cast<double>(rows.size());
}

void check_split(const CohortDataset& data, const Split& split) {
  std::vector<int> seen(data.n_samples(), 0);
  for (auto rows : {&split.train, &split.test}) {
    for (std::size_t r : *rows) {
      if (r >= data.n_samples()) throw UsageError("split: row out of range");
      if (seen[r]++) throw UsageError("split: row listed twice");
    }
  }
  if (split.train.empty()) throw UsageError("split: no training rows");
}

// The single training loop shared by every scheme.
TrainResult run_training(const CohortDataset& data, const TrainConfig& cfg, const Split& split,
                         WeightSource src, const TrainHooks& hooks) {
  cfg.validate();
  check_split(data, split);
  data.validate();

  Rng init_rng = substream(cfg.seed, "init");
  Rng shuffle_rng = substream(cfg.seed, "shuffle");
  GruShape shape{data.feature_width(), cfg.hidden, cfg.fc};
  auto model = make_classifier(cfg.model, shape, init_rng);

  AdamState model_opt(model->n_params());
  AdamState coeff_opt(src.field ? src.field->m_count() : 0);

  TrainResult result;
  result.initial_objective = mean_objective(*model, data, split.train, src);

  std::vector<std::size_t> order = split.train;
  const std::size_t n_train = order.size();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t end = std::min(n_train, start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const double scale = 1.0 / static_cast<double>(batch.size());
      auto og = objective_impl(*model, data, batch, src, scale);
      if (!std::isfinite(og.objective)) {
        throw NumericalError("training: non-finite objective at epoch " + std::to_string(epoch + 1) +
                             ", batch starting at " + std::to_string(start));
      }
      epoch_total += og.objective * static_cast<double>(batch.size());
      model_opt.step(model->parameters(), og.grad_model, cfg.lr_model);
      if (src.field && src.learn_coeffs) {
        coeff_opt.step(src.field->coeffs(), og.grad_a, cfg.lr_a);
      }
    }
    result.epoch_objectives.push_back(epoch_total / static_cast<double>(n_train));
    for (double p : model->parameters()) {
      if (!std::isfinite(p)) {
        throw NumericalError("training: non-finite parameter after epoch " + std::to_string(epoch + 1));
      }
    }
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1, *model, src.field);
  }

  result.final_objective = mean_objective(*model, data, split.train, src);
  if (!std::isfinite(result.final_objective)) throw NumericalError("training: non-finite final objective");
  result.sample_weights.resize(data.n_samples());
  for (std::size_t i = 0; i < data.n_samples(); ++i) result.sample_weights[i] = src.weight(i);
  result.model = std::move(model);
  return result;
}

TrainResult train_with_field(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                             const TrainConfig& cfg, const Split& split, const TrainHooks& hooks,
                             bool only_graph) {
  if (!basis) throw UsageError("training: scheme " + to_string(cfg.scheme) + " needs a spectral basis");
  if (basis->n_samples() != data.n_samples()) {
    throw UsageError("training: basis rows do not match the number of samples");
  }
  WeightField field(std::move(basis), cfg.centering_c, split.train, split.test);
  if (only_graph) field.set_coeffs(std::vector<double>(field.m_count(), 1.0));
  WeightSource src{&field, !only_graph, {}};
  auto result = run_training(data, cfg, split, src, hooks);
  result.field = std::move(field);
  return result;
}

}  // namespace

ObjectiveGradient weighted_objective(const Classifier& model, const CohortDataset& data,
                                     std::span<const std::size_t> rows, const WeightField& field,
                                     double scale) {
  WeightSource src{const_cast<WeightField*>(&field), false, {}};
  return objective_impl(model, data, rows, src, scale);
}

ObjectiveGradient weighted_objective(const Classifier& model, const CohortDataset& data,
                                     std::span<const std::size_t> rows,
                                     std::span<const double> sample_weights, double scale) {
  if (sample_weights.size() != data.n_samples()) {
    throw UsageError("objective: one weight per sample required");
  }
  return objective_impl(model, data, rows, WeightSource{nullptr, false, sample_weights}, scale);
}

TrainResult train_spectral(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                           const TrainConfig& cfg, const Split& split, const TrainHooks& hooks) {
  return train_with_field(data, std::move(basis), cfg, split, hooks, false);
}

TrainResult train_only_graph(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                             const TrainConfig& cfg, const Split& split, const TrainHooks& hooks) {
  return train_with_field(data, std::move(basis), cfg, split, hooks, true);
}

TrainResult train_baseline_none(const CohortDataset& data, const TrainConfig& cfg, const Split& split,
                                const TrainHooks& hooks) {
  const std::vector<double> ones(data.n_samples(), 1.0);
  return run_training(data, cfg, split, WeightSource{nullptr, false, ones}, hooks);
}

TrainResult train_jtt(const CohortDataset& data, const TrainConfig& cfg, const Split& split,
                      const TrainHooks& hooks) {
  cfg.validate();
  const auto stage1 = train_baseline_none(data, cfg, split);

  std::vector<double> weights(data.n_samples(), 1.0);
  for (std::size_t row : split.train) {
    const auto& s = data.subjects[row];
    const int predicted = stage1.model->predict(s.visits) >= 0.5 ? 1 : 0;
    if (predicted != s.label) weights[row] = cfg.jtt_lambda;
  }

  TrainConfig stage2_cfg = cfg;
  stage2_cfg.seed = cfg.seed + 1;
  return run_training(data, stage2_cfg, split, WeightSource{nullptr, false, weights}, hooks);
}

TrainResult train(const CohortDataset& data, std::shared_ptr<const SpectralBasis> basis,
                  const TrainConfig& cfg, const Split& split, const TrainHooks& hooks) {
  switch (cfg.scheme) {
    case Scheme::none: return train_baseline_none(data, cfg, split, hooks);
    case Scheme::spectral: return train_spectral(data, std::move(basis), cfg, split, hooks);
    case Scheme::only_graph: return train_only_graph(data, std::move(basis), cfg, split, hooks);
    case Scheme::jtt: return train_jtt(data, cfg, split, hooks);
  }
  throw UsageError("unknown scheme");
}

nlohmann::json run_manifest(const TrainConfig& cfg, const TrainResult& result, std::size_t fold) {
  nlohmann::json j;
  j["fold"] = fold;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["initial_objective"] = result.initial_objective;
  j["final_objective"] = result.final_objective;
  j["epoch_objectives"] = result.epoch_objectives;
  if (result.field) {
    j["m_count"] = result.field->m_count();
    j["coeffs_a"] = std::vector<double>(result.field->coeffs().begin(), result.field->coeffs().end());
  }
  return j;
}

}  // namespace scw
