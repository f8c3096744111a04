#include "scw/cohort.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "scw/errors.hpp"

namespace scw {

std::vector<int> CohortDataset::labels() const {
  std::vector<int> y;
  y.reserve(subjects.size());
  for (const auto& s : subjects) y.push_back(s.label);
  return y;
}

void CohortDataset::validate() const {
  for (const auto& s : subjects) {
    if (s.visits.rows() == 0) throw DataError("subject " + s.id + " has no visits");
    if (s.visits.cols() != feature_width()) {
      throw DataError("subject " + s.id + " has visit width " + std::to_string(s.visits.cols()) +
                      ", expected " + std::to_string(feature_width()));
    }
    if (s.label != 0 && s.label != 1) throw DataError("subject " + s.id + " has non-binary label");
    if (!s.visits.all_finite()) throw DataError("subject " + s.id + " has non-finite features");
  }
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("cohort csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

long parse_int(const std::string& s, std::size_t line_no) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("cohort csv line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

Cohort read_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("cohort csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "visit" || header[2] != "y") {
    throw DataError("cohort csv: header must start with subject_id,visit,y");
  }

  std::vector<std::string> factor_names, feature_names;
  std::size_t col = 3;
  for (; col < header.size() && starts_with(header[col], "f_"); ++col)
    factor_names.push_back(header[col].substr(2));
  for (; col < header.size() && starts_with(header[col], "x_"); ++col)
    feature_names.push_back(header[col].substr(2));
  if (col != header.size()) {
    throw DataError("cohort csv: unexpected column '" + header[col] +
                    "' (factor columns f_* must precede feature columns x_*)");
  }
  if (factor_names.empty()) throw DataError("cohort csv: no factor (f_*) columns");
  if (feature_names.empty()) throw DataError("cohort csv: no feature (x_*) columns");

  const std::size_t D = factor_names.size();
  const std::size_t F = feature_names.size();
  Cohort cohort;
  cohort.data.feature_names = feature_names;
  std::vector<double> factor_values;
  std::vector<std::vector<double>> visit_rows;
  std::vector<double> current_factors;

  auto flush = [&]() {
    if (cohort.data.subjects.empty()) return;
    auto& s = cohort.data.subjects.back();
    std::vector<double> flat;
    flat.reserve(visit_rows.size() * F);
    for (const auto& r : visit_rows) flat.insert(flat.end(), r.begin(), r.end());
    s.visits = Matrix(visit_rows.size(), F, std::move(flat));
    visit_rows.clear();
  };

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("cohort csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    if (id.empty()) throw DataError("cohort csv line " + std::to_string(line_no) + ": empty subject_id");
    const long visit = parse_int(cells[1], line_no);
    const long y = parse_int(cells[2], line_no);
    if (y != 0 && y != 1) throw DataError("cohort csv line " + std::to_string(line_no) + ": y must be 0 or 1");
    std::vector<double> factors(D), features(F);
    for (std::size_t d = 0; d < D; ++d) factors[d] = parse_double(cells[3 + d], line_no);
    for (std::size_t f = 0; f < F; ++f) features[f] = parse_double(cells[3 + D + f], line_no);

    const bool new_subject = cohort.data.subjects.empty() || cohort.data.subjects.back().id != id;
    if (new_subject) {
      if (!cohort.data.subjects.empty() && !(cohort.data.subjects.back().id < id)) {
        throw DataError("cohort csv line " + std::to_string(line_no) +
                        ": rows must be sorted by subject_id");
      }
      flush();
      if (visit != 0) throw DataError("cohort csv line " + std::to_string(line_no) + ": first visit must be 0");
      cohort.data.subjects.push_back(Subject{id, Matrix(), static_cast<int>(y)});
      factor_values.insert(factor_values.end(), factors.begin(), factors.end());
      current_factors = factors;
    } else {
      auto& s = cohort.data.subjects.back();
      if (visit != static_cast<long>(visit_rows.size())) {
        throw DataError("cohort csv line " + std::to_string(line_no) + ": visits must be contiguous");
      }
      if (y != s.label) throw DataError("cohort csv line " + std::to_string(line_no) + ": label changes within subject");
      if (factors != current_factors) {
        throw DataError("cohort csv line " + std::to_string(line_no) + ": factors change within subject");
      }
    }
    visit_rows.push_back(std::move(features));
  }
  flush();
  if (cohort.data.subjects.empty()) throw DataError("cohort csv: no data rows");

  cohort.factors.names = factor_names;
  cohort.factors.values = Matrix(cohort.data.subjects.size(), D, std::move(factor_values));
  cohort.data.validate();
  if (!cohort.factors.values.all_finite()) throw DataError("cohort csv: non-finite factor value");
  return cohort;
}

Cohort read_cohort_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file " + path);
  return read_cohort_csv(in);
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  out << "subject_id,visit,y";
  for (const auto& n : cohort.factors.names) out << ",f_" << n;
  for (const auto& n : cohort.data.feature_names) out << ",x_" << n;
  out << '\n';
  for (std::size_t i = 0; i < cohort.data.subjects.size(); ++i) {
    const auto& s = cohort.data.subjects[i];
    for (std::size_t t = 0; t < s.visits.rows(); ++t) {
      out << s.id << ',' << t << ',' << s.label;
      for (double v : cohort.factors.values.row(i)) out << ',' << format_double(v);
      for (double v : s.visits.row(t)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_cohort_csv(const std::string& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write cohort file " + path);
  write_cohort_csv(out, cohort);
}

}  // namespace scw
