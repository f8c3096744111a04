#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "scw/factor_graph.hpp"
#include "scw/linalg.hpp"

namespace scw {

struct Subject {
  std::string id;
  Matrix visits;  // visit x feature, chronological
  int label = 0;
};

/// Longitudinal cohort: one variable-length visit sequence and one binary
/// label per subject.
struct CohortDataset {
  std::vector<Subject> subjects;
  std::vector<std::string> feature_names;

  std::size_t n_samples() const { return subjects.size(); }
  std::size_t feature_width() const { return feature_names.size(); }
  std::vector<int> labels() const;

  // Throws DataError when a sequence is empty, widths differ or a label is not 0/1.
  void validate() const;
};

struct Cohort {
  CohortDataset data;
  FactorTable factors;  // raw values, row i belongs to data.subjects[i]
};

/// Long-format cohort CSV: subject_id, visit, y, f_* factor columns, x_*
/// feature columns; rows sorted by (subject_id, visit).
Cohort read_cohort_csv(std::istream& in);
Cohort read_cohort_csv(const std::string& path);
void write_cohort_csv(std::ostream& out, const Cohort& cohort);
void write_cohort_csv(const std::string& path, const Cohort& cohort);

// Shortest round-trip representation of a double.
std::string format_double(double x);

}  // namespace scw
