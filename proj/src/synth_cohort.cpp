#include "scw/synth_cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "scw/errors.hpp"
#include "scw/rng.hpp"

namespace scw {

void SynthSpec::validate() const {
  if (n_subjects < 2) throw UsageError("synth: n_subjects must be >= 2");
  if (feature_width < 2) throw UsageError("synth: feature_width must be >= 2");
  if (min_visits < 1) throw UsageError("synth: min_visits must be >= 1");
  if (max_visits < min_visits) throw UsageError("synth: max_visits must be >= min_visits");
  if (factors.empty()) throw UsageError("synth: at least one factor required");
  for (double f : {flip_above, flip_below}) {
    if (!(f >= 0.0 && f < 0.5)) throw UsageError("synth: flip probabilities must lie in [0, 0.5)");
  }
  if (!std::isfinite(signal_strength) || signal_strength < 0.0) {
    throw UsageError("synth: signal_strength must be finite and >= 0");
  }
  if (!std::isfinite(drift)) throw UsageError("synth: drift must be finite");
  const bool known = std::any_of(factors.begin(), factors.end(),
                                 [&](const SynthFactor& f) { return f.name == noise_factor; });
  if (!known) throw UsageError("synth: noise_factor '" + noise_factor + "' is not a declared factor");
  for (const auto& f : factors) {
    if (f.name.empty() || f.name.find(',') != std::string::npos) {
      throw UsageError("synth: invalid factor name '" + f.name + "'");
    }
  }
}

namespace {

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw UsageError("synth: " + key + " must be an integer, got '" + v + "'");
  }
  if (pos != v.size() || x < 0) throw UsageError("synth: " + key + " must be a non-negative integer");
  return static_cast<std::size_t>(x);
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw UsageError("synth: " + key + " must be a number, got '" + v + "'");
  }
  if (pos != v.size()) throw UsageError("synth: " + key + " must be a number, got '" + v + "'");
  return x;
}

}  // namespace

SynthSpec parse_synth_spec(const std::map<std::string, std::string>& kv, SynthSpec spec) {
  for (const auto& [key, value] : kv) {
    if (key == "n_subjects") spec.n_subjects = to_count(key, value);
    else if (key == "feature_width") spec.feature_width = to_count(key, value);
    else if (key == "min_visits") spec.min_visits = to_count(key, value);
    else if (key == "max_visits") spec.max_visits = to_count(key, value);
    else if (key == "noise_factor") spec.noise_factor = value;
    else if (key == "noise_threshold") spec.noise_threshold = to_real(key, value);
    else if (key == "flip_above") spec.flip_above = to_real(key, value);
    else if (key == "flip_below") spec.flip_below = to_real(key, value);
    else if (key == "signal_strength") spec.signal_strength = to_real(key, value);
    else if (key == "drift") spec.drift = to_real(key, value);
    else if (key == "seed") spec.seed = to_count(key, value);
    else if (key == "factors") {
      spec.factors.clear();
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("synth: factor '" + item + "' needs :binary or :continuous");
        const std::string kind = item.substr(colon + 1);
        if (kind != "binary" && kind != "continuous") throw UsageError("synth: unknown factor kind '" + kind + "'");
        spec.factors.push_back({item.substr(0, colon), kind == "binary" ? FactorKind::binary : FactorKind::continuous});
      }
    } else {
      throw UsageError("synth: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

SyntheticCohort generate(const SynthSpec& spec) {
  spec.validate();
  Rng dir_rng = substream(spec.seed, "synth-directions");
  Rng rng = substream(spec.seed, "synth-subjects");
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t F = spec.feature_width;
  auto unit_direction = [&]() {
    std::vector<double> v(F);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : v) {
        x = normal(dir_rng);
        norm += x * x;
      }
    } while (norm == 0.0);
    for (double& x : v) x /= std::sqrt(norm);
    return v;
  };
  const auto signal_dir = unit_direction();
  const auto drift_dir = unit_direction();

  const std::size_t D = spec.factors.size();
  std::size_t noise_col = 0;
  for (std::size_t d = 0; d < D; ++d)
    if (spec.factors[d].name == spec.noise_factor) noise_col = d;

  SyntheticCohort out;
  auto& cohort = out.cohort;
  for (std::size_t f = 0; f < F; ++f) cohort.data.feature_names.push_back(std::to_string(f));
  for (const auto& f : spec.factors) cohort.factors.names.push_back(f.name);
  std::vector<double> factor_values;
  factor_values.reserve(spec.n_subjects * D);

  const int id_width = static_cast<int>(std::to_string(spec.n_subjects - 1).size());
  const std::size_t span = spec.max_visits - spec.min_visits + 1;
  for (std::size_t i = 0; i < spec.n_subjects; ++i) {
    std::vector<double> fac(D);
    for (std::size_t d = 0; d < D; ++d) {
      fac[d] = spec.factors[d].kind == FactorKind::binary ? (uniform01(rng) < 0.5 ? 0.0 : 1.0)
                                                          : normal(rng);
    }
    const int truth = uniform01(rng) < 0.5 ? 0 : 1;
    const double sign = truth == 1 ? 1.0 : -1.0;
    const std::size_t visits = spec.min_visits + static_cast<std::size_t>(rng() % span);
    Matrix x(visits, F);
    for (std::size_t t = 0; t < visits; ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        x(t, f) = sign * spec.signal_strength * signal_dir[f] + normal(rng) +
                  spec.drift * static_cast<double>(t) * drift_dir[f];
      }
    }
    const bool high_noise = !(fac[noise_col] > spec.noise_threshold);
    const double flip = high_noise ? spec.flip_below : spec.flip_above;
    const int observed = uniform01(rng) < flip ? 1 - truth : truth;

    char id[32];
    std::snprintf(id, sizeof(id), "S%0*zu", id_width, i);
    cohort.data.subjects.push_back(Subject{id, std::move(x), observed});
    factor_values.insert(factor_values.end(), fac.begin(), fac.end());
    out.high_noise.push_back(high_noise ? 1 : 0);
    out.true_labels.push_back(truth);
  }
  cohort.factors.values = Matrix(spec.n_subjects, D, std::move(factor_values));
  return out;
}

CohortSummary describe(const Cohort& cohort) {
  CohortSummary s;
  const auto& subjects = cohort.data.subjects;
  s.n_subjects = subjects.size();
  if (subjects.empty()) return s;
  std::size_t positives = 0, total = 0;
  s.min_visits = subjects.front().visits.rows();
  for (const auto& subj : subjects) {
    positives += subj.label == 1;
    total += subj.visits.rows();
    s.min_visits = std::min(s.min_visits, subj.visits.rows());
    s.max_visits = std::max(s.max_visits, subj.visits.rows());
  }
  const double n = static_cast<double>(s.n_subjects);
  s.positive_fraction = static_cast<double>(positives) / n;
  s.mean_visits = static_cast<double>(total) / n;
  double var = 0.0;
  for (const auto& subj : subjects) {
    const double d = static_cast<double>(subj.visits.rows()) - s.mean_visits;
    var += d * d;
  }
  s.sd_visits = std::sqrt(var / n);

  s.factor_names = cohort.factors.names;
  for (std::size_t d = 0; d < cohort.factors.n_factors(); ++d) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.n_subjects; ++i) m += cohort.factors.values(i, d);
    m /= n;
    double v = 0.0;
    for (std::size_t i = 0; i < s.n_subjects; ++i) {
      const double dev = cohort.factors.values(i, d) - m;
      v += dev * dev;
    }
    s.factor_means.push_back(m);
    s.factor_sds.push_back(std::sqrt(v / n));
  }
  return s;
}

void write_ground_truth_csv(const std::string& path, const SyntheticCohort& synth) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "subject_id,noise_group\n";
  for (std::size_t i = 0; i < synth.high_noise.size(); ++i) {
    out << synth.cohort.data.subjects[i].id << ',' << (synth.high_noise[i] ? "high" : "low") << '\n';
  }
}

}  // namespace scw
