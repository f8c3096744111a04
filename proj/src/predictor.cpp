#include "scw/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "scw/errors.hpp"

namespace scw {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

namespace {

// out += W x, W stored row-major rows x cols at w.
void gemv_add(const double* w, std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += wi[j] * x[j];
    out[i] += s;
  }
}

// out += W^T d
void gemv_t_add(const double* w, std::size_t rows, std::size_t cols, const double* d, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double di = d[i];
    if (di == 0.0) continue;
    const double* wi = w + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += di * wi[j];
  }
}

// G += d x^T
void outer_add(double* g, std::size_t rows, std::size_t cols, const double* d, const double* x) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double di = d[i];
    if (di == 0.0) continue;
    double* gi = g + i * cols;
    for (std::size_t j = 0; j < cols; ++j) gi[j] += di * x[j];
  }
}

void fill_uniform(std::span<double> dst, double bound, Rng& rng) {
  for (double& x : dst) x = (2.0 * uniform01(rng) - 1.0) * bound;
}

}  // namespace

GruClassifier::Offsets GruClassifier::layout(const GruShape& s) {
  Offsets o{};
  std::size_t at = 0;
  auto take = [&](std::size_t count) {
    const std::size_t here = at;
    at += count;
    return here;
  };
  o.wz = take(s.hidden * s.input);
  o.wr = take(s.hidden * s.input);
  o.wn = take(s.hidden * s.input);
  o.uz = take(s.hidden * s.hidden);
  o.ur = take(s.hidden * s.hidden);
  o.un = take(s.hidden * s.hidden);
  o.bz = take(s.hidden);
  o.br = take(s.hidden);
  o.bn = take(s.hidden);
  o.w1 = take(s.fc * s.hidden);
  o.b1 = take(s.fc);
  o.w2 = take(s.fc);
  o.b2 = take(1);
  o.total = at;
  return o;
}

GruClassifier::GruClassifier(GruShape shape) : shape_(shape), off_(layout(shape)) {
  if (shape.input == 0 || shape.hidden == 0 || shape.fc == 0) {
    throw UsageError("GruClassifier: dimensions must be positive");
  }
  params_.assign(off_.total, 0.0);
}

GruClassifier::GruClassifier(GruShape shape, Rng& rng) : GruClassifier(shape) {
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(shape.input));
  const double hid_bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  const double fc_bound = 1.0 / std::sqrt(static_cast<double>(shape.fc));
  auto p = std::span<double>(params_);
  const std::size_t hf = shape.hidden * shape.input;
  const std::size_t hh = shape.hidden * shape.hidden;
  fill_uniform(p.subspan(off_.wz, 3 * hf), in_bound, rng);
  fill_uniform(p.subspan(off_.uz, 3 * hh), hid_bound, rng);
  fill_uniform(p.subspan(off_.bz, 3 * shape.hidden), hid_bound, rng);
  fill_uniform(p.subspan(off_.w1, shape.fc * shape.hidden + shape.fc), hid_bound, rng);
  fill_uniform(p.subspan(off_.w2, shape.fc + 1), fc_bound, rng);
}

void GruClassifier::check_width(const Matrix& visits) const {
  if (visits.rows() == 0) throw DataError("GruClassifier: empty visit sequence");
  if (visits.cols() != shape_.input) {
    throw DataError("GruClassifier: visit width " + std::to_string(visits.cols()) +
                    " does not match model input " + std::to_string(shape_.input));
  }
}

GruCache GruClassifier::forward(const Matrix& visits) const {
  check_width(visits);
  const std::size_t H = shape_.hidden, F = shape_.input, H2 = shape_.fc;
  const std::size_t T = visits.rows();
  const double* p = params_.data();

  GruCache c;
  c.steps = T;
  c.visits = &visits;
  c.h.assign((T + 1) * H, 0.0);
  c.z.assign(T * H, 0.0);
  c.r.assign(T * H, 0.0);
  c.n.assign(T * H, 0.0);
  c.rh.assign(T * H, 0.0);

  std::vector<double> az(H), ar(H), an(H);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = visits.row(t).data();
    const double* hp = &c.h[t * H];
    double* z = &c.z[t * H];
    double* r = &c.r[t * H];
    double* nn = &c.n[t * H];
    double* rh = &c.rh[t * H];
    double* h = &c.h[(t + 1) * H];

    std::copy(p + off_.bz, p + off_.bz + H, az.begin());
    std::copy(p + off_.br, p + off_.br + H, ar.begin());
    std::copy(p + off_.bn, p + off_.bn + H, an.begin());
    gemv_add(p + off_.wz, H, F, x, az.data());
    gemv_add(p + off_.uz, H, H, hp, az.data());
    gemv_add(p + off_.wr, H, F, x, ar.data());
    gemv_add(p + off_.ur, H, H, hp, ar.data());
    for (std::size_t i = 0; i < H; ++i) {
      z[i] = sigmoid(az[i]);
      r[i] = sigmoid(ar[i]);
      rh[i] = r[i] * hp[i];
    }
    gemv_add(p + off_.wn, H, F, x, an.data());
    gemv_add(p + off_.un, H, H, rh, an.data());
    for (std::size_t i = 0; i < H; ++i) {
      nn[i] = std::tanh(an[i]);
      h[i] = (1.0 - z[i]) * hp[i] + z[i] * nn[i];
    }
  }

  const double* hT = &c.h[T * H];
  c.fc_pre.assign(p + off_.b1, p + off_.b1 + H2);
  gemv_add(p + off_.w1, H2, H, hT, c.fc_pre.data());
  c.fc_out.resize(H2);
  for (std::size_t i = 0; i < H2; ++i) c.fc_out[i] = std::max(0.0, c.fc_pre[i]);
  c.logit = p[off_.b2];
  for (std::size_t i = 0; i < H2; ++i) c.logit += p[off_.w2 + i] * c.fc_out[i];
  if (!std::isfinite(c.logit)) throw NumericalError("GruClassifier: non-finite activation");
  c.probability = sigmoid(c.logit);
  return c;
}

std::vector<double> GruClassifier::backward(const GruCache& cache, double d_prob) const {
  std::vector<double> grad(params_.size(), 0.0);
  const double p = cache.probability;
  backward_logit(cache, d_prob * p * (1.0 - p), grad);
  return grad;
}

void GruClassifier::backward_logit(const GruCache& c, double d_logit, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw UsageError("backward: gradient buffer size mismatch");
  if (c.visits == nullptr || c.visits->cols() != shape_.input ||
      c.h.size() != (c.steps + 1) * shape_.hidden) {
    throw UsageError("backward: cache does not belong to this model");
  }
  if (d_logit == 0.0) return;
  const std::size_t H = shape_.hidden, F = shape_.input, H2 = shape_.fc;
  const std::size_t T = c.steps;
  const double* p = params_.data();
  double* g = grad.data();

  // Dense head.
  g[off_.b2] += d_logit;
  std::vector<double> d_pre(H2);
  for (std::size_t i = 0; i < H2; ++i) {
    g[off_.w2 + i] += d_logit * c.fc_out[i];
    d_pre[i] = c.fc_pre[i] > 0.0 ? d_logit * p[off_.w2 + i] : 0.0;
  }
  const double* hT = &c.h[T * H];
  outer_add(g + off_.w1, H2, H, d_pre.data(), hT);
  for (std::size_t i = 0; i < H2; ++i) g[off_.b1 + i] += d_pre[i];

  std::vector<double> dh(H, 0.0);
  gemv_t_add(p + off_.w1, H2, H, d_pre.data(), dh.data());

  // Back through time.
  std::vector<double> dh_prev(H), da_n(H), da_z(H), da_r(H), d_rh(H);
  for (std::size_t t = T; t-- > 0;) {
    const double* x = c.visits->row(t).data();
    const double* hp = &c.h[t * H];
    const double* z = &c.z[t * H];
    const double* r = &c.r[t * H];
    const double* nn = &c.n[t * H];
    const double* rh = &c.rh[t * H];

    for (std::size_t i = 0; i < H; ++i) {
      const double dn = dh[i] * z[i];
      const double dz = dh[i] * (nn[i] - hp[i]);
      dh_prev[i] = dh[i] * (1.0 - z[i]);
      da_n[i] = dn * (1.0 - nn[i] * nn[i]);
      da_z[i] = dz * z[i] * (1.0 - z[i]);
    }
    outer_add(g + off_.wn, H, F, da_n.data(), x);
    outer_add(g + off_.un, H, H, da_n.data(), rh);
    for (std::size_t i = 0; i < H; ++i) g[off_.bn + i] += da_n[i];
    std::fill(d_rh.begin(), d_rh.end(), 0.0);
    gemv_t_add(p + off_.un, H, H, da_n.data(), d_rh.data());
    for (std::size_t i = 0; i < H; ++i) {
      dh_prev[i] += d_rh[i] * r[i];
      da_r[i] = d_rh[i] * hp[i] * r[i] * (1.0 - r[i]);
    }

    outer_add(g + off_.wz, H, F, da_z.data(), x);
    outer_add(g + off_.uz, H, H, da_z.data(), hp);
    outer_add(g + off_.wr, H, F, da_r.data(), x);
    outer_add(g + off_.ur, H, H, da_r.data(), hp);
    for (std::size_t i = 0; i < H; ++i) {
      g[off_.bz + i] += da_z[i];
      g[off_.br + i] += da_r[i];
    }
    gemv_t_add(p + off_.uz, H, H, da_z.data(), dh_prev.data());
    gemv_t_add(p + off_.ur, H, H, da_r.data(), dh_prev.data());
    dh.swap(dh_prev);
  }
}

double GruClassifier::predict(const Matrix& visits) const { return forward(visits).probability; }

double GruClassifier::loss_and_gradient(const Matrix& visits, int label, double scale,
                                        std::span<double> grad) const {
  const GruCache cache = forward(visits);
  // d BCE / d logit = p - y
  backward_logit(cache, scale * (cache.probability - label), grad);
  return bce_loss(cache.probability, label);
}

std::unique_ptr<Classifier> GruClassifier::clone() const {
  return std::make_unique<GruClassifier>(*this);
}

LogisticClassifier::LogisticClassifier(std::size_t input_width)
    : width_(input_width), params_(input_width + 1, 0.0) {
  if (input_width == 0) throw UsageError("LogisticClassifier: input width must be positive");
}

LogisticClassifier::LogisticClassifier(std::size_t input_width, Rng& rng)
    : LogisticClassifier(input_width) {
  fill_uniform(params_, 1.0 / std::sqrt(static_cast<double>(input_width)), rng);
}

double LogisticClassifier::logit(const Matrix& visits) const {
  if (visits.rows() == 0) throw DataError("LogisticClassifier: empty visit sequence");
  if (visits.cols() != width_) {
    throw DataError("LogisticClassifier: visit width " + std::to_string(visits.cols()) +
                    " does not match model input " + std::to_string(width_));
  }
  const auto last = visits.row(visits.rows() - 1);
  return params_[width_] + dot(last, std::span<const double>(params_).first(width_));
}

double LogisticClassifier::predict(const Matrix& visits) const { return sigmoid(logit(visits)); }

double LogisticClassifier::loss_and_gradient(const Matrix& visits, int label, double scale,
                                             std::span<double> grad) const {
  const double p = sigmoid(logit(visits));
  const double d = scale * (p - label);
  const auto last = visits.row(visits.rows() - 1);
  for (std::size_t j = 0; j < width_; ++j) grad[j] += d * last[j];
  grad[width_] += d;
  return bce_loss(p, label);
}

std::unique_ptr<Classifier> LogisticClassifier::clone() const {
  return std::make_unique<LogisticClassifier>(*this);
}

std::unique_ptr<Classifier> make_classifier(ModelKind kind, const GruShape& shape, Rng& rng) {
  if (kind == ModelKind::logistic) return std::make_unique<LogisticClassifier>(shape.input, rng);
  return std::make_unique<GruClassifier>(shape, rng);
}

namespace {

constexpr char kMagic[4] = {'S', 'C', 'W', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Classifier& model) {
  out.write(kMagic, 4);
  GruShape shape{model.input_width(), 0, 0};
  std::uint64_t kind = 1;
  if (const auto* gru = dynamic_cast<const GruClassifier*>(&model)) {
    shape = gru->shape();
    kind = 0;
  }
  put_u64(out, kind);
  put_u64(out, shape.input);
  put_u64(out, shape.hidden);
  put_u64(out, shape.fc);
  const auto params = model.parameters();
  put_u64(out, params.size());
  for (double x : params) put_u64(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const Classifier& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open " + path);
  save_checkpoint(out, model);
}

std::unique_ptr<Classifier> load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw DataError("checkpoint: bad magic");
  const std::uint64_t kind = get_u64(in);
  GruShape shape;
  shape.input = get_u64(in);
  shape.hidden = get_u64(in);
  shape.fc = get_u64(in);
  const std::uint64_t count = get_u64(in);

  std::unique_ptr<Classifier> model;
  if (kind == 0) {
    model = std::make_unique<GruClassifier>(shape);
  } else if (kind == 1) {
    model = std::make_unique<LogisticClassifier>(shape.input);
  } else {
    throw DataError("checkpoint: unknown model kind");
  }
  auto params = model->parameters();
  if (params.size() != count) throw DataError("checkpoint: parameter count does not match shape");
  for (double& x : params) x = std::bit_cast<double>(get_u64(in));
  return model;
}

std::unique_ptr<Classifier> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace scw
