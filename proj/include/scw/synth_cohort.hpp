#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scw/cohort.hpp"

namespace scw {

enum class FactorKind { binary, continuous };

struct SynthFactor {
  std::string name;
  FactorKind kind = FactorKind::continuous;
};

/// Generator settings. Label noise depends on one factor: the observed label
/// is flipped with probability flip_above when that factor exceeds
/// noise_threshold and flip_below otherwise.
struct SynthSpec {
  std::size_t n_subjects = 400;
  std::size_t feature_width = 20;
  std::size_t min_visits = 1;
  std::size_t max_visits = 5;
  std::vector<SynthFactor> factors = {
      {"sex", FactorKind::binary}, {"ses", FactorKind::continuous}, {"famhist", FactorKind::continuous}};
  std::string noise_factor = "sex";
  double noise_threshold = 0.0;
  double flip_above = 0.05;
  double flip_below = 0.40;
  double signal_strength = 1.0;
  double drift = 0.1;
  std::uint64_t seed = 0;

  void validate() const;  // UsageError on invalid fields
};

/// Reads key=value lines ('#' starts a comment) over the defaults.
/// `factors` is a comma list of name:binary|continuous.
SynthSpec parse_synth_spec(const std::map<std::string, std::string>& kv, SynthSpec base = {});

struct SyntheticCohort {
  Cohort cohort;
  std::vector<int> high_noise;  // 1 when the subject sits in the noisier group
  std::vector<int> true_labels; // before flipping
};

/// Deterministic in (spec, seed). Per subject: factors, a uniform true label,
/// visits = label sign * signal_strength * u + N(0, I) + drift * t * v for fixed
/// unit directions u, v, then the observed label flipped with the
/// factor-conditioned probability.
SyntheticCohort generate(const SynthSpec& spec);

struct CohortSummary {
  std::size_t n_subjects = 0;
  double positive_fraction = 0.0;
  std::size_t min_visits = 0;
  std::size_t max_visits = 0;
  double mean_visits = 0.0;
  double sd_visits = 0.0;
  std::vector<std::string> factor_names;
  std::vector<double> factor_means;
  std::vector<double> factor_sds;  // population
};

CohortSummary describe(const Cohort& cohort);

void write_ground_truth_csv(const std::string& path, const SyntheticCohort& synth);

}  // namespace scw
