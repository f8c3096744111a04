#include "scw/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "scw/errors.hpp"

namespace scw {

void write_weights_csv(std::ostream& out, const CvResult& cv, const CohortDataset& data) {
  out << "subject_id,fold,split,weight\n";
  for (const auto& f : cv.folds) {
    for (std::size_t k = 0; k < f.train_rows.size(); ++k) {
      out << data.subjects[f.train_rows[k]].id << ',' << f.fold << ",train,"
          << format_double(f.train_weights[k]) << '\n';
    }
    for (const auto& s : f.test) {
      out << s.subject_id << ',' << f.fold << ",test," << format_double(s.weight) << '\n';
    }
  }
}

void write_predictions_csv(std::ostream& out, const CvResult& cv, const Cohort& cohort) {
  out << "index,subject_id,fold,y,probability,weight";
  for (const auto& n : cohort.factors.names) out << ",f_" << n;
  out << '\n';
  for (const auto& s : cv.pooled_test()) {
    out << s.index << ',' << s.subject_id << ',' << s.fold << ',' << s.label << ','
        << format_double(s.probability) << ',' << format_double(s.weight);
    for (double v : cohort.factors.values.row(s.index)) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(std::string("predictions csv: bad ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

PredictionTable read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("predictions csv: empty input");
  const auto header = split_line(line);
  const std::vector<std::string> fixed = {"index", "subject_id", "fold", "y", "probability", "weight"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw DataError("predictions csv: unexpected header");
  }
  PredictionTable t;
  for (std::size_t c = fixed.size(); c < header.size(); ++c) {
    if (header[c].rfind("f_", 0) != 0) throw DataError("predictions csv: unexpected column " + header[c]);
    t.factors.names.push_back(header[c].substr(2));
  }
  const std::size_t D = t.factors.names.size();
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) throw DataError("predictions csv: wrong field count");
    SamplePrediction s;
    s.index = parse_number<std::size_t>(cells[0], "index");
    s.subject_id = cells[1];
    s.fold = parse_number<std::size_t>(cells[2], "fold");
    s.label = parse_number<int>(cells[3], "label");
    s.probability = parse_number<double>(cells[4], "probability");
    s.weight = parse_number<double>(cells[5], "weight");
    if (s.label != 0 && s.label != 1) throw DataError("predictions csv: label must be 0 or 1");
    for (std::size_t d = 0; d < D; ++d) values.push_back(parse_number<double>(cells[6 + d], "factor"));
    t.pooled.push_back(std::move(s));
  }
  if (t.pooled.empty()) throw DataError("predictions csv: no rows");
  t.factors.values = Matrix(t.pooled.size(), D, std::move(values));
  return t;
}

std::string format_mean_std(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", 100.0 * mean, 100.0 * sd);
  return buf;
}

nlohmann::json to_json(const MedianSplit& s) {
  return {{"median_weight", s.median_weight}, {"n_high", s.n_high},     {"n_low", s.n_low},
          {"bacc_high", s.bacc_high},         {"bacc_low", s.bacc_low}, {"gap_points", s.gap_points},
          {"gap_percent", s.gap_percent},     {"degenerate", s.degenerate}};
}

nlohmann::json to_json(const SubcohortReport& r) {
  nlohmann::json j;
  j["factor"] = r.factor;
  j["binary"] = r.binary;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : r.groups) {
    j["groups"].push_back({{"label", g.label},
                           {"n", g.n},
                           {"mean_weight", g.mean_weight},
                           {"bacc", g.bacc ? nlohmann::json(*g.bacc) : nlohmann::json(nullptr)},
                           {"lower", g.lower},
                           {"upper", g.upper}});
  }
  j["tests"] = nlohmann::json::array();
  for (const auto& t : r.tests) {
    j["tests"].push_back({{"group_a", r.groups[t.group_a].label},
                          {"group_b", r.groups[t.group_b].label},
                          {"u", t.test.u},
                          {"z", t.test.z},
                          {"p_value", t.test.p_value}});
  }
  return j;
}

nlohmann::json to_json(const SweepCell& c) {
  return {{"k", c.k},
          {"c", c.c},
          {"seed", c.seed},
          {"gap_percent", c.gap_percent},
          {"gap_points", c.gap_points},
          {"mean_bacc", c.mean_bacc},
          {"degenerate", c.degenerate}};
}

nlohmann::json evaluation_report(const PredictionTable& table, const nlohmann::json& config) {
  std::map<std::size_t, std::pair<std::vector<int>, std::vector<double>>> by_fold;
  for (const auto& s : table.pooled) {
    by_fold[s.fold].first.push_back(s.label);
    by_fold[s.fold].second.push_back(s.probability);
  }
  nlohmann::json j;
  j["config"] = config;
  j["folds"] = nlohmann::json::array();
  std::vector<double> baccs, f1s;
  for (const auto& [fold, yp] : by_fold) {
    const double b = balanced_accuracy(yp.first, yp.second);
    const double f = f1_score(yp.first, yp.second);
    baccs.push_back(b);
    f1s.push_back(f);
    j["folds"].push_back({{"fold", fold}, {"n_test", yp.first.size()}, {"bacc", b}, {"f1", f}});
  }
  auto stats = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
  };
  const auto [bm, bs] = stats(baccs);
  const auto [fm, fs] = stats(f1s);
  j["overall"] = {{"bacc_mean", bm}, {"bacc_std", bs}, {"f1_mean", fm}, {"f1_std", fs},
                  {"bacc_table", format_mean_std(bm, bs)}, {"f1_table", format_mean_std(fm, fs)}};
  j["median_split"] = to_json(median_split_gap(table.pooled));
  j["subcohorts"] = nlohmann::json::array();
  for (std::size_t d = 0; d < table.factors.n_factors(); ++d) {
    const auto column = table.factors.values.column(d);
    j["subcohorts"].push_back(to_json(factor_subcohort_table(table.pooled, column, table.factors.names[d])));
  }
  return j;
}

void write_subcohort_csv(std::ostream& out, const SubcohortReport& r) {
  out << "factor,group,n,mean_weight,bacc,lower,upper\n";
  for (const auto& g : r.groups) {
    out << r.factor << ',' << g.label << ',' << g.n << ',' << format_double(g.mean_weight) << ','
        << (g.bacc ? format_double(*g.bacc) : std::string()) << ',' << format_double(g.lower) << ','
        << format_double(g.upper) << '\n';
  }
  out << "\nfactor,group_a,group_b,u,z,p_value\n";
  for (const auto& t : r.tests) {
    out << r.factor << ',' << r.groups[t.group_a].label << ',' << r.groups[t.group_b].label << ','
        << format_double(t.test.u) << ',' << format_double(t.test.z) << ','
        << format_double(t.test.p_value) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "k,c,seed,gap_percent,gap_points,mean_bacc,degenerate\n";
  for (const auto& c : cells) {
    out << c.k << ',' << format_double(c.c) << ',' << c.seed << ',' << format_double(c.gap_percent) << ','
        << format_double(c.gap_points) << ',' << format_double(c.mean_bacc) << ','
        << (c.degenerate ? 1 : 0) << '\n';
  }
}

void write_eigenspectrum_csv(std::ostream& out, const LaplacianSpectrum& spectrum, std::size_t m_selected) {
  out << "index,eigenvalue,null,selected\n";
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i) {
    const bool null = i < spectrum.null_dimension;
    const bool selected = !null && i < spectrum.null_dimension + m_selected;
    out << i << ',' << format_double(spectrum.eigenvalues[i]) << ',' << (null ? 1 : 0) << ','
        << (selected ? 1 : 0) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace scw
