#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "scw/evaluation.hpp"

namespace scw {

// weights.csv: subject_id,fold,split,weight for every sample of every fold.
void write_weights_csv(std::ostream& out, const CvResult& cv, const CohortDataset& data);

// predictions.csv: index,subject_id,fold,y,probability,weight,f_<factor>...
// One row per test sample; carries the raw factors so reports need no cohort.
void write_predictions_csv(std::ostream& out, const CvResult& cv, const Cohort& cohort);

struct PredictionTable {
  std::vector<SamplePrediction> pooled;  // sorted by index
  FactorTable factors;                   // row k belongs to pooled[k]
};
PredictionTable read_predictions_csv(std::istream& in);

nlohmann::json to_json(const MedianSplit& s);
nlohmann::json to_json(const SubcohortReport& r);
nlohmann::json to_json(const SweepCell& c);

/// Mean and population std of per-fold BACC/F1 (in percent, like
/// "63.7 ± 3.7"), the median-weight split and one sub-cohort table per factor.
nlohmann::json evaluation_report(const PredictionTable& table, const nlohmann::json& config);

void write_subcohort_csv(std::ostream& out, const SubcohortReport& r);
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);
void write_eigenspectrum_csv(std::ostream& out, const LaplacianSpectrum& spectrum, std::size_t m_selected);
void write_matrix_csv(std::ostream& out, const Matrix& m);

std::string format_mean_std(double mean, double sd);  // percent, one decimal

}  // namespace scw
