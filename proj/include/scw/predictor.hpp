#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scw/linalg.hpp"
#include "scw/rng.hpp"

namespace scw {

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(double p, int y);

double sigmoid(double x);

/// Sequence-to-one binary classifier with a flat parameter vector, so one
/// optimizer serves every model kind.
class Classifier {
public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;
  std::size_t n_params() const { return parameters().size(); }

  virtual double predict(const Matrix& visits) const = 0;

  /// BCE loss of one sequence. Adds scale * dLoss/dtheta into `grad`.
  virtual double loss_and_gradient(const Matrix& visits, int label, double scale,
                                   std::span<double> grad) const = 0;

  virtual std::unique_ptr<Classifier> clone() const = 0;
};

struct GruShape {
  std::size_t input = 0;    // F
  std::size_t hidden = 64;  // H
  std::size_t fc = 32;      // H2
};

/// Everything the backward pass needs from one forward pass.
struct GruCache {
  std::size_t steps = 0;
  const Matrix* visits = nullptr;
  std::vector<double> h;   // (steps + 1) x H, h[0] = 0
  std::vector<double> z;   // steps x H
  std::vector<double> r;
  std::vector<double> n;
  std::vector<double> rh;  // r * h_prev
  std::vector<double> fc_pre;
  std::vector<double> fc_out;
  double logit = 0.0;
  double probability = 0.5;
};

/// Gated recurrent layer over visits followed by fc1 (ReLU) and fc2 (logit).
///
///   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
///   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
///   n_t = tanh(Wn x_t + Un (r_t * h_{t-1}) + bn)
///   h_t = (1 - z_t) * h_{t-1} + z_t * n_t
///
/// The final hidden state h_T feeds the two dense layers.
class GruClassifier final : public Classifier {
public:
  explicit GruClassifier(GruShape shape);  // all-zero parameters
  GruClassifier(GruShape shape, Rng& rng);  // uniform(+-1/sqrt(fan_in))

  const GruShape& shape() const { return shape_; }

  std::string kind() const override { return "gru"; }
  std::size_t input_width() const override { return shape_.input; }
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }

  GruCache forward(const Matrix& visits) const;
  /// Gradient of the loss given d loss / d probability.
  std::vector<double> backward(const GruCache& cache, double d_prob) const;
  /// Accumulates d loss / d theta given d loss / d logit.
  void backward_logit(const GruCache& cache, double d_logit, std::span<double> grad) const;

  double predict(const Matrix& visits) const override;
  double loss_and_gradient(const Matrix& visits, int label, double scale,
                           std::span<double> grad) const override;
  std::unique_ptr<Classifier> clone() const override;

private:
  struct Offsets {
    std::size_t wz, wr, wn, uz, ur, un, bz, br, bn, w1, b1, w2, b2, total;
  };
  static Offsets layout(const GruShape& s);
  void check_width(const Matrix& visits) const;

  GruShape shape_;
  Offsets off_;
  std::vector<double> params_;
};

/// Single linear layer + logistic on the last visit only; a fast stand-in
/// for the recurrent model in tests.
class LogisticClassifier final : public Classifier {
public:
  explicit LogisticClassifier(std::size_t input_width);
  LogisticClassifier(std::size_t input_width, Rng& rng);

  std::string kind() const override { return "logistic"; }
  std::size_t input_width() const override { return width_; }
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }

  double predict(const Matrix& visits) const override;
  double loss_and_gradient(const Matrix& visits, int label, double scale,
                           std::span<double> grad) const override;
  std::unique_ptr<Classifier> clone() const override;

private:
  double logit(const Matrix& visits) const;
  std::size_t width_;
  std::vector<double> params_;  // weights then bias
};

enum class ModelKind { gru, logistic };

std::unique_ptr<Classifier> make_classifier(ModelKind kind, const GruShape& shape, Rng& rng);

/// Checkpoint: "SCW1", kind, shape header and the parameters as
/// little-endian 64-bit floats.
void save_checkpoint(std::ostream& out, const Classifier& model);
void save_checkpoint(const std::string& path, const Classifier& model);
std::unique_ptr<Classifier> load_checkpoint(std::istream& in);
std::unique_ptr<Classifier> load_checkpoint(const std::string& path);

}  // namespace scw
