#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>

#include "scw/cli_app.hpp"
#include "scw/errors.hpp"
#include "scw/evaluation.hpp"
#include "scw/synth_cohort.hpp"
#include "scw/training.hpp"

namespace py = pybind11;
using namespace scw;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) {
  return {a.data(), a.data() + a.size()};
}

FactorTable factor_table(const Array& factors) {
  FactorTable t{to_matrix(factors), {}};
  for (std::size_t d = 0; d < t.n_factors(); ++d) t.names.push_back("f" + std::to_string(d));
  return t;
}

std::optional<std::size_t> parse_m(const py::object& m) {
  if (m.is_none()) return std::nullopt;
  return m.cast<std::size_t>();
}

py::dict summarize(const CvResult& cv) {
  py::list rows;
  for (const auto& s : cv.pooled_test()) {
    rows.append(py::dict(py::arg("index") = s.index, py::arg("subject_id") = s.subject_id, py::arg("fold") = s.fold,
                         py::arg("label") = s.label, py::arg("probability") = s.probability,
                         py::arg("weight") = s.weight));
  }
  const auto split = median_split_gap(cv.pooled_test());
  py::dict median(py::arg("median_weight") = split.median_weight, py::arg("bacc_high") = split.bacc_high,
                  py::arg("bacc_low") = split.bacc_low, py::arg("gap_points") = split.gap_points,
                  py::arg("gap_percent") = split.gap_percent, py::arg("degenerate") = split.degenerate);
  std::vector<double> fold_bacc;
  for (const auto& f : cv.folds) fold_bacc.push_back(f.bacc);
  return py::dict(py::arg("bacc_mean") = cv.mean_bacc(), py::arg("bacc_std") = cv.std_bacc(),
                  py::arg("f1_mean") = cv.mean_f1(), py::arg("f1_std") = cv.std_f1(),
                  py::arg("fold_bacc") = fold_bacc, py::arg("m_count") = cv.basis ? cv.basis->m_count() : 0,
                  py::arg("median_split") = median, py::arg("predictions") = rows);
}

TrainConfig make_config(const std::string& scheme, std::size_t k, double c, const py::object& m,
                        std::size_t epochs, double lr_model, double lr_a, std::size_t batch,
                        double jtt_lambda, std::uint64_t seed, const std::string& model,
                        std::size_t hidden, std::size_t fc) {
  TrainConfig cfg;
  cfg.scheme = parse_scheme(scheme);
  cfg.k_neighbors = k;
  cfg.centering_c = c;
  cfg.m_basis = parse_m(m);
  cfg.epochs = epochs;
  cfg.lr_model = lr_model;
  cfg.lr_a = lr_a;
  cfg.batch_size = batch;
  cfg.jtt_lambda = jtt_lambda;
  cfg.seed = seed;
  if (model == "gru") cfg.model = ModelKind::gru;
  else if (model == "logistic") cfg.model = ModelKind::logistic;
  else throw UsageError("unknown model '" + model + "' (expected gru or logistic)");
  cfg.hidden = hidden;
  cfg.fc = fc;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral factor-graph sample weighting for longitudinal cohorts.";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("symmetric_eigen", [](const Array& a) {
    const auto eig = symmetric_eigen(to_matrix(a));
    return py::make_tuple(to_array(eig.eigenvalues), to_array(eig.eigenvectors));
  }, py::arg("matrix"), "Ascending eigenvalues and sign-fixed eigenvectors (columns) of a symmetric matrix.");

  m.def("standardize", [](const Array& factors) { return to_array(standardize(factor_table(factors)).values); },
        py::arg("factors"), "Column z-scores with the population standard deviation.");

  m.def("adjacency", [](const Array& factors, std::size_t k) {
    return to_array(build_graph(standardize(factor_table(factors)), k).adjacency);
  }, py::arg("factors"), py::arg("k"), "kNN similarity graph over standardized factors.");

  m.def("laplacian", [](const Array& factors, std::size_t k) {
    return to_array(laplacian(build_graph(standardize(factor_table(factors)), k)));
  }, py::arg("factors"), py::arg("k"));

  m.def("spectral_basis", [](const Array& factors, std::size_t k, const py::object& m_basis) {
    const auto lap = laplacian(build_graph(standardize(factor_table(factors)), k));
    const auto b = spectral_basis(lap, parse_m(m_basis));
    return py::make_tuple(to_array(b.basis), to_array(b.eigenvalues), b.null_dimension);
  }, py::arg("factors"), py::arg("k") = 50, py::arg("m") = py::none(),
     "(basis N x M, eigenvalues, null dimension); m=None selects M at the largest eigenvalue gap.");

  m.def("select_m_changepoint", [](const Array& eigenvalues) { return select_m_changepoint(to_vector(eigenvalues)); },
        py::arg("eigenvalues"));

  m.def("sample_weights", [](const Array& basis, const Array& a, double c) {
    const Matrix e = to_matrix(basis);
    const auto coeffs = to_vector(a);
    if (coeffs.size() != e.cols()) throw UsageError("coefficient length must equal the basis width");
    auto w = matvec(e, coeffs);
    for (double& x : w) x += c;
    return to_array(w);
  }, py::arg("basis"), py::arg("a"), py::arg("c"), "w = c + E a");

  m.def("balanced_accuracy", [](const std::vector<int>& y, const std::vector<double>& p) {
    return balanced_accuracy(y, p);
  }, py::arg("labels"), py::arg("probabilities"));
  m.def("f1_score", [](const std::vector<int>& y, const std::vector<double>& p) { return f1_score(y, p); },
        py::arg("labels"), py::arg("probabilities"));

  m.def("mann_whitney_u", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = mann_whitney_u(a, b);
    return py::dict(py::arg("u") = r.u, py::arg("u_a") = r.u_a, py::arg("z") = r.z, py::arg("p_value") = r.p_value);
  }, py::arg("a"), py::arg("b"));

  m.def("stratified_kfold", [](const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
    return stratified_kfold(labels, k, seed);
  }, py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0);

  m.def("write_synthetic_cohort", [](const std::string& path, const std::map<std::string, std::string>& spec) {
    const auto synth = generate(parse_synth_spec(spec));
    write_cohort_csv(path, synth.cohort);
    return synth.high_noise;
  }, py::arg("path"), py::arg("spec") = std::map<std::string, std::string>{},
     "Writes a synthetic cohort CSV and returns the per-subject high-noise flags.");

  m.def("cross_validate", [](const std::string& cohort_csv, const std::string& scheme, std::size_t k, double c,
                             const py::object& m_basis, std::size_t epochs, double lr_model, double lr_a,
                             std::size_t batch, double jtt_lambda, std::uint64_t seed, const std::string& model,
                             std::size_t hidden, std::size_t fc, std::size_t folds, std::size_t workers) {
    const auto cfg = make_config(scheme, k, c, m_basis, epochs, lr_model, lr_a, batch, jtt_lambda, seed, model,
                                 hidden, fc);
    const auto cohort = read_cohort_csv(cohort_csv);
    CvResult cv;
    {
      py::gil_scoped_release release;
      cv = cross_validate(cohort, cfg, CvOptions{folds, workers});
    }
    return summarize(cv);
  }, py::arg("cohort_csv"), py::arg("scheme") = "spectral", py::arg("k") = 50, py::arg("c") = 0.65,
     py::arg("m") = py::none(), py::arg("epochs") = 100, py::arg("lr_model") = 1e-4, py::arg("lr_a") = 1e-5,
     py::arg("batch_size") = 32, py::arg("jtt_lambda") = 2.0, py::arg("seed") = 0, py::arg("model") = "gru",
     py::arg("hidden") = 64, py::arg("fc") = 32, py::arg("folds") = 5, py::arg("workers") = 0,
     "Stratified k-fold training; returns fold metrics, the median-weight split and pooled test predictions.");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the scw command line in-process; returns (exit code, stdout, stderr).");
}
