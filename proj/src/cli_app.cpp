#include "scw/cli_app.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "scw/cohort.hpp"
#include "scw/errors.hpp"
#include "scw/evaluation.hpp"
#include "scw/report.hpp"
#include "scw/synth_cohort.hpp"
#include "scw/training.hpp"

namespace fs = std::filesystem;

namespace scw {

std::map<std::string, std::string> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace {

struct TrainFlags {
  std::string scheme = "spectral";
  std::size_t k = 50;
  double c = 0.65;
  std::string m = "auto";
  std::size_t epochs = 100;
  double lr_model = 1e-4;
  double lr_a = 1e-5;
  std::size_t batch = 32;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double jtt_lambda = 2.0;
  std::string model = "gru";
  std::size_t hidden = 64;
  std::size_t fc = 32;
  std::size_t workers = 0;

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.scheme = parse_scheme(scheme);
    cfg.k_neighbors = k;
    cfg.centering_c = c;
    cfg.m_basis = parse_m(m);
    cfg.epochs = epochs;
    cfg.lr_model = lr_model;
    cfg.lr_a = lr_a;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.jtt_lambda = jtt_lambda;
    if (model == "gru") cfg.model = ModelKind::gru;
    else if (model == "logistic") cfg.model = ModelKind::logistic;
    else throw UsageError("unknown model '" + model + "' (expected gru or logistic)");
    cfg.hidden = hidden;
    cfg.fc = fc;
    cfg.validate();
    return cfg;
  }

  static std::optional<std::size_t> parse_m(const std::string& m) {
    if (m == "auto") return std::nullopt;
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(m, &pos);
    } catch (const std::exception&) {
    }
    if (v < 0 || pos != m.size()) throw UsageError("--m must be a non-negative integer or 'auto'");
    return static_cast<std::size_t>(v);
  }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--scheme", f.scheme, "none | spectral | only_graph | jtt")->capture_default_str();
  cmd->add_option("--k", f.k, "nearest neighbours in the factor graph")->capture_default_str();
  cmd->add_option("--c", f.c, "centering reference weight")->capture_default_str();
  cmd->add_option("--m", f.m, "number of eigenbases or 'auto'")->capture_default_str();
  cmd->add_option("--epochs", f.epochs)->capture_default_str();
  cmd->add_option("--lr-model", f.lr_model)->capture_default_str();
  cmd->add_option("--lr-a", f.lr_a)->capture_default_str();
  cmd->add_option("--batch", f.batch)->capture_default_str();
  cmd->add_option("--folds", f.folds)->capture_default_str();
  cmd->add_option("--seed", f.seed)->capture_default_str();
  cmd->add_option("--jtt-lambda", f.jtt_lambda)->capture_default_str();
  cmd->add_option("--model", f.model, "gru | logistic")->capture_default_str();
  cmd->add_option("--hidden", f.hidden)->capture_default_str();
  cmd->add_option("--fc", f.fc)->capture_default_str();
  cmd->add_option("--workers", f.workers, "parallel folds/cells, 0 = all cores")->capture_default_str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir);
}

void dump_graph(const fs::path& dir, const GraphArtifacts& g) {
  {
    auto out = open_out(dir / "adjacency.csv");
    write_matrix_csv(out, g.graph.adjacency);
  }
  {
    auto out = open_out(dir / "laplacian.csv");
    write_matrix_csv(out, g.laplacian);
  }
  {
    auto out = open_out(dir / "basis.csv");
    write_matrix_csv(out, g.basis->basis);
  }
}

void write_spectrum(const fs::path& dir, const GraphArtifacts& g) {
  auto out = open_out(dir / "eigenspectrum.csv");
  write_eigenspectrum_csv(out, g.spectrum, g.basis->m_count());
}

void warn_disconnected(const GraphArtifacts& g, std::ostream& err) {
  if (g.spectrum.null_dimension > 1) {
    err << "warning: factor graph has " << g.spectrum.null_dimension
        << " connected components (null eigenvalues); their indicator directions are not in the basis\n";
  }
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  std::map<std::string, std::string> kv;
  if (!spec_path.empty()) kv = read_key_value_file(spec_path);
  if (seed) kv["seed"] = std::to_string(*seed);
  const SynthSpec spec = parse_synth_spec(kv);
  ensure_dir(out_dir);
  const auto synth = generate(spec);
  write_cohort_csv((fs::path(out_dir) / "cohort.csv").string(), synth.cohort);
  write_ground_truth_csv((fs::path(out_dir) / "groundtruth.csv").string(), synth);
  const auto summary = describe(synth.cohort);
  out << "wrote " << summary.n_subjects << " subjects (" << summary.mean_visits
      << " visits on average, positive fraction " << summary.positive_fraction << ") to " << out_dir << '\n';
  return kExitOk;
}

int cmd_graph(const std::string& cohort_path, const std::string& out_dir, std::size_t k,
              const std::string& m, bool dump, std::ostream& out, std::ostream& err) {
  const auto cohort = read_cohort_csv(cohort_path);
  ensure_dir(out_dir);
  const auto g = build_graph_artifacts(cohort.factors, k, TrainFlags::parse_m(m));
  warn_disconnected(g, err);
  write_spectrum(out_dir, g);
  nlohmann::json j;
  j["k"] = k;
  j["m_requested"] = m;
  j["m_selected"] = g.basis->m_count();
  j["null_dimension"] = g.spectrum.null_dimension;
  j["eigenvalues"] = g.spectrum.eigenvalues;
  write_json(fs::path(out_dir) / "graph.json", j);
  if (dump) dump_graph(out_dir, g);
  out << "M = " << g.basis->m_count() << " (null dimension " << g.spectrum.null_dimension << ")\n";
  return kExitOk;
}

int cmd_train(const std::string& cohort_path, const std::string& out_dir, const TrainFlags& flags,
              bool dump, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = flags.config();
  const auto cohort = read_cohort_csv(cohort_path);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);

  CvOptions opts{flags.folds, flags.workers};
  CvResult cv;
  if (cfg.scheme == Scheme::spectral || cfg.scheme == Scheme::only_graph) {
    const auto g = build_graph_artifacts(cohort.factors, cfg.k_neighbors, cfg.m_basis);
    warn_disconnected(g, err);
    write_spectrum(dir, g);
    if (dump) dump_graph(dir, g);
    cv = cross_validate(cohort, cfg, opts, g.basis, g.spectrum.eigenvalues);
  } else {
    cv = cross_validate(cohort, cfg, opts);
  }

  for (const auto& f : cv.folds) {
    write_json(dir / ("manifest_fold" + std::to_string(f.fold) + ".json"), f.manifest);
  }
  {
    auto o = open_out(dir / "weights.csv");
    write_weights_csv(o, cv, cohort.data);
  }
  {
    auto o = open_out(dir / "predictions.csv");
    write_predictions_csv(o, cv, cohort);
  }
  for (const auto& f : cv.folds) {
    save_checkpoint((dir / ("model_fold" + std::to_string(f.fold) + ".bin")).string(), *f.model);
  }
  nlohmann::json run;
  run["cohort"] = cohort_path;
  run["config"] = to_json(cfg);
  run["folds"] = flags.folds;
  run["m_count"] = cv.basis ? nlohmann::json(cv.basis->m_count()) : nlohmann::json(nullptr);
  run["bacc_mean"] = cv.mean_bacc();
  run["bacc_std"] = cv.std_bacc();
  run["f1_mean"] = cv.mean_f1();
  run["f1_std"] = cv.std_f1();
  write_json(dir / "run.json", run);
  out << "scheme " << to_string(cfg.scheme) << ": BACC " << format_mean_std(cv.mean_bacc(), cv.std_bacc())
      << ", F1 " << format_mean_std(cv.mean_f1(), cv.std_f1()) << '\n';
  return kExitOk;
}

int cmd_report(const std::string& run_dir, std::string out_dir, std::ostream& out) {
  const fs::path run(run_dir);
  if (!fs::is_directory(run)) throw DataError("run directory " + run_dir + " does not exist");
  std::ifstream pin(run / "predictions.csv");
  if (!pin) throw DataError("missing " + (run / "predictions.csv").string());
  const auto table = read_predictions_csv(pin);
  nlohmann::json config;
  if (std::ifstream rin(run / "run.json"); rin) {
    config = nlohmann::json::parse(rin).value("config", nlohmann::json::object());
  }
  if (out_dir.empty()) out_dir = run_dir;
  ensure_dir(out_dir);
  const fs::path dir(out_dir);

  const auto report = evaluation_report(table, config);
  write_json(dir / "report.json", report);
  for (std::size_t d = 0; d < table.factors.n_factors(); ++d) {
    const auto& name = table.factors.names[d];
    const auto sub = factor_subcohort_table(table.pooled, table.factors.values.column(d), name);
    auto o = open_out(dir / ("subcohorts_" + name + ".csv"));
    write_subcohort_csv(o, sub);
  }
  const auto& ms = report["median_split"];
  out << "BACC " << report["overall"]["bacc_table"].get<std::string>() << "  F1 "
      << report["overall"]["f1_table"].get<std::string>() << "  high/low BACC "
      << 100.0 * ms["bacc_high"].get<double>() << " / " << 100.0 * ms["bacc_low"].get<double>()
      << " (gap " << ms["gap_percent"].get<double>() << "%)\n";
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

int cmd_sweep(const std::string& cohort_path, const std::string& out_dir, const TrainFlags& flags,
              const std::string& k_list, const std::string& c_list, std::ostream& out) {
  TrainFlags f = flags;
  f.scheme = "spectral";
  const TrainConfig cfg = f.config();
  std::vector<std::size_t> ks = kDefaultSweepK;
  std::vector<double> cs = kDefaultSweepC;
  try {
    if (!k_list.empty()) {
      ks.clear();
      for (const auto& s : split_list(k_list)) ks.push_back(std::stoul(s));
    }
    if (!c_list.empty()) {
      cs.clear();
      for (const auto& s : split_list(c_list)) cs.push_back(std::stod(s));
    }
  } catch (const std::exception&) {
    throw UsageError("--k-list and --c-list take comma-separated numbers");
  }
  const auto cohort = read_cohort_csv(cohort_path);
  ensure_dir(out_dir);
  const auto cells = sweep(cohort, ks, cs, cfg, CvOptions{flags.folds, flags.workers});
  {
    auto o = open_out(fs::path(out_dir) / "sweep_grid.csv");
    write_sweep_csv(o, cells);
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cells) j.push_back(to_json(c));
  write_json(fs::path(out_dir) / "sweep_grid.json", j);
  out << "sweep: " << ks.size() << " x " << cs.size() << " cells written to " << out_dir << '\n';
  return kExitOk;
}

// Config-file values are injected ahead of the user's flags; with the
// take-last policy the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> expanded;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      expanded.push_back(args[i]);
      continue;
    }
    for (const auto& [key, value] : read_key_value_file(path)) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      injected.push_back("--" + flag + "=" + value);
    }
  }
  if (injected.empty() || expanded.empty()) return expanded;
  // expanded[0] is the subcommand
  std::vector<std::string> out{expanded.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), expanded.begin() + 1, expanded.end());
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral factor-graph sample weighting"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::string cohort, out_dir, spec_path, run_dir, m = "auto", k_list, c_list;
  std::uint64_t synth_seed = 0;
  std::size_t graph_k = 50;
  bool dump = false;
  TrainFlags train_flags, sweep_flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  synth->add_option("--spec", spec_path, "key=value generator settings");
  synth->add_option("--out", out_dir)->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed);

  auto* graph = app.add_subcommand("graph", "factor graph, Laplacian spectrum and M selection");
  graph->add_option("--cohort", cohort)->required();
  graph->add_option("--out", out_dir)->required();
  graph->add_option("--k", graph_k)->capture_default_str();
  graph->add_option("--m", m)->capture_default_str();
  graph->add_flag("--dump-graph", dump, "write adjacency, Laplacian and basis CSVs");

  auto* train_cmd = app.add_subcommand("train", "cross-validated training");
  train_cmd->add_option("--cohort", cohort)->required();
  train_cmd->add_option("--out", out_dir)->required();
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_flag("--dump-graph", dump, "write adjacency, Laplacian and basis CSVs");

  auto* report = app.add_subcommand("report", "evaluation report of a train run");
  report->add_option("--run", run_dir)->required();
  report->add_option("--out", out_dir, "defaults to the run directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "K x c grid of median-split gaps");
  sweep_cmd->add_option("--cohort", cohort)->required();
  sweep_cmd->add_option("--out", out_dir)->required();
  sweep_cmd->add_option("--k-list", k_list, "comma list, default 10,30,50,75,100");
  sweep_cmd->add_option("--c-list", c_list, "comma list, default 0.5,0.65,0.7,0.75,1");
  add_train_flags(sweep_cmd, sweep_flags);

  try {
    auto args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (*synth) {
      return cmd_synth(spec_path, out_dir,
                       synth_seed_opt->count() ? std::optional(synth_seed) : std::nullopt, out);
    }
    if (*graph) return cmd_graph(cohort, out_dir, graph_k, m, dump, out, err);
    if (*train_cmd) return cmd_train(cohort, out_dir, train_flags, dump, out, err);
    if (*report) return cmd_report(run_dir, out_dir, out);
    if (*sweep_cmd) return cmd_sweep(cohort, out_dir, sweep_flags, k_list, c_list, out);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace scw
