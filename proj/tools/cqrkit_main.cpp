#include "cqrkit/io.hpp"
#include "cqrkit/simulate.hpp"
#include "cqrkit/solver.hpp"
#include "cqrkit/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cqrkit;

constexpr int kExitBadInput = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitGammaExhausted = 4;

std::vector<double> parse_tau_list(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      taus.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw InputError("cannot parse tau value '" + token + "'");
    }
  }
  if (taus.empty()) throw InputError("empty tau list");
  return taus;
}

int default_workers() {
  if (const char* env = std::getenv("CQRKIT_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) return parsed;
  }
  return 1;
}

struct FitArgs {
  std::string csv;
  std::string estimator;
  double tau = 0.5;
  double gamma = 0.0;
  std::string taus_text;
  double margin = 0.0;
  double tol = 1e-8;
  std::string out;
  std::string dump_program;
};

int run_fit(const FitArgs& args) {
  const Dataset data = read_dataset_csv(args.csv);
  SolverSettings settings;
  settings.abs_tol = settings.rel_tol = args.tol;

  FitArtifact artifact;
  FitDiagnostics diag;
  if (args.estimator == "cqr" || args.estimator == "pcqr") {
    const CqrProgram built = args.estimator == "cqr"
                                 ? build_cqr(data, args.tau)
                                 : build_pcqr(data, args.tau, args.gamma);
    if (!args.dump_program.empty()) {
      std::ofstream dump(args.dump_program, std::ios::binary);
      dump_triplets(built.program, dump);
    }
    const QuantileModel model = fit(built, settings, &diag);
    artifact = make_fit_artifact(args.estimator, data, {model}, diag.residuals,
                                 diag.iterations);
  } else {
    const std::vector<double> taus = parse_tau_list(args.taus_text);
    const ScqrProgram built = build_scqr(data, taus, args.margin);
    if (!args.dump_program.empty()) {
      std::ofstream dump(args.dump_program, std::ios::binary);
      dump_triplets(built.program, dump);
    }
    const MultiQuantileModel multi = fit(built, settings, &diag);
    artifact = make_fit_artifact("scqr", data, multi.models, diag.residuals,
                                 diag.iterations, args.margin);
  }
  write_fit_artifact(artifact, args.out);
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

struct SearchArgs {
  std::string csv;
  double tau1 = 0.15;
  double tau2 = 0.25;
  double step = 0.01;
  double gamma_max = 10.0;
  double tol = 1e-8;
  std::string out;
};

int run_search(const SearchArgs& args) {
  const Dataset data = read_dataset_csv(args.csv);
  GammaSearchOptions opts;
  opts.step = args.step;
  opts.gamma_max = args.gamma_max;
  opts.solver.abs_tol = opts.solver.rel_tol = args.tol;

  const GammaSearchResult result = search_gamma(data, args.tau1, args.tau2, opts);

  std::filesystem::create_directories(args.out);
  GammaReport report;
  report.gamma_star = result.gamma_star;
  report.step = args.step;
  report.gamma_max = args.gamma_max;
  report.iterations = result.iterations;
  report.crossing_counts = result.crossing_counts;
  write_gamma_report(report, std::filesystem::path(args.out) / "gamma_report.json");

  KktResiduals none;
  write_fit_artifact(make_fit_artifact("pcqr", data, {result.model_low}, none, 0),
                     std::filesystem::path(args.out) / "fit_low.json");
  write_fit_artifact(make_fit_artifact("pcqr", data, {result.model_high}, none, 0),
                     std::filesystem::path(args.out) / "fit_high.json");
  std::cout << "gamma_star " << format_double(result.gamma_star) << "\n";
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  std::string estimators_text;
  int workers = default_workers();
  std::optional<std::uint64_t> seed;
  double tol = 1e-8;
  std::string out;
};

int run_simulate(const SimulateArgs& args, const std::string& command) {
  std::vector<ScenarioSpec> specs = read_scenario_file(args.scenario);
  if (!args.estimators_text.empty()) {
    std::vector<std::string> estimators;
    std::stringstream ss(args.estimators_text);
    std::string token;
    while (std::getline(ss, token, ',')) estimators.push_back(token);
    for (const auto& est : estimators)
      if (est != "pcqr" && est != "scqr")
        throw InputError("unknown estimator '" + est + "' (use pcqr or scqr)");
    for (auto& spec : specs) spec.estimators = estimators;
  }
  if (args.seed)
    for (auto& spec : specs) spec.cfg.seed = *args.seed;

  SolverSettings settings;
  settings.abs_tol = settings.rel_tol = args.tol;

  const auto start = std::chrono::steady_clock::now();
  std::vector<ScenarioRunResult> results;
  results.reserve(specs.size());
  for (const auto& spec : specs)
    results.push_back(run_scenario(spec, args.workers, settings));
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(args.out);
  write_run_outputs(results, args.out);
  write_manifest(results, command, args.workers, elapsed, args.out);

  int failures = 0;
  for (const auto& run : results) failures += run.failures;
  std::cout << "scenarios " << results.size() << ", failures " << failures
            << ", wall_clock_seconds " << format_double(elapsed) << "\n";
  return 0;
}

struct CurveArgs {
  std::vector<std::string> fits;
  std::string grid_text;
  std::string grid_file;
  std::string out;
};

double parse_grid_number(const std::string& token, size_t row, Eigen::Index col) {
  try {
    size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw InputError("grid file row " + std::to_string(row) + ", column " +
                     std::to_string(col) + ": cannot parse '" + token + "'");
  }
}

Eigen::MatrixXd build_grid(const CurveArgs& args, const std::vector<FitArtifact>& artifacts) {
  const Eigen::Index d = artifacts.front().d;
  if (!args.grid_file.empty()) {
    const CsvTable table = read_csv_table(args.grid_file);
    Eigen::Index cols = static_cast<Eigen::Index>(table.header.size());
    const bool has_y = !table.header.empty() && table.header.back() == "y";
    if (has_y) --cols;
    if (cols != d) throw InputError("grid file has " + std::to_string(cols) +
                                    " input columns, fits expect " + std::to_string(d));
    if (table.rows.empty()) throw InputError("grid file holds no points");
    Eigen::MatrixXd grid(static_cast<Eigen::Index>(table.rows.size()), d);
    for (size_t i = 0; i < table.rows.size(); ++i) {
      if (static_cast<Eigen::Index>(table.rows[i].size()) != cols + (has_y ? 1 : 0))
        throw InputError("grid file row " + std::to_string(i + 2) + " is ragged");
      for (Eigen::Index k = 0; k < d; ++k)
        grid(static_cast<Eigen::Index>(i), k) =
            parse_grid_number(table.rows[i][static_cast<size_t>(k)], i + 2, k + 1);
    }
    return grid;
  }

  if (d != 1)
    throw InputError("fits have d = " + std::to_string(d) +
                     "; supply --grid-file with matching x1..x" + std::to_string(d) +
                     " columns");
  double lo = artifacts.front().x_min[0];
  double hi = artifacts.front().x_max[0];
  Eigen::Index count = 100;
  if (!args.grid_text.empty()) {
    double a = 0, b = 0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(args.grid_text);
    if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 2 || !(b > a))
      throw InputError("grid spec must be min:max:count with count >= 2 and max > min");
    lo = a;
    hi = b;
    count = n;
  } else {
    for (const auto& artifact : artifacts) {
      lo = std::min(lo, artifact.x_min[0]);
      hi = std::max(hi, artifact.x_max[0]);
    }
  }
  Eigen::MatrixXd grid(count, 1);
  for (Eigen::Index i = 0; i < count; ++i)
    grid(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

int run_export_curve(const CurveArgs& args) {
  if (args.fits.empty()) throw InputError("supply at least one --fit artifact");
  std::vector<FitArtifact> artifacts;
  for (const auto& path : args.fits) artifacts.push_back(read_fit_artifact(path));
  const Eigen::Index d = artifacts.front().d;
  for (const auto& artifact : artifacts)
    if (artifact.d != d) throw InputError("fit artifacts disagree on input dimension");

  const Eigen::MatrixXd grid = build_grid(args, artifacts);

  std::ostringstream out;
  for (Eigen::Index k = 0; k < d; ++k) out << "x" << (k + 1) << ',';
  std::vector<Eigen::VectorXd> columns;
  std::vector<std::string> labels;
  for (const auto& artifact : artifacts) {
    for (const auto& model : artifact.models) {
      std::string label = "qhat_" + artifact.estimator + "_tau" + format_double(model.tau);
      for (size_t prev = 0; prev < labels.size(); ++prev)
        if (labels[prev] == label) label += "_" + std::to_string(columns.size());
      labels.push_back(label);
      columns.push_back(evaluate_all(model, grid));
    }
  }
  for (size_t c = 0; c < labels.size(); ++c)
    out << labels[c] << (c + 1 < labels.size() ? ',' : '\n');
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) out << format_double(grid(i, k)) << ',';
    for (size_t c = 0; c < columns.size(); ++c)
      out << format_double(columns[c][i]) << (c + 1 < columns.size() ? "," : "\n");
  }
  std::ofstream f(args.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + args.out);
  f << out.str();
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape-constrained quantile regression toolkit"};
  app.set_version_flag("--version", std::string(cqrkit::kVersion));
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator on CSV data");
  fit_cmd->add_option("--csv", fit_args.csv, "input CSV (header x1,...,xd,y)")->required();
  fit_cmd->add_option("--estimator", fit_args.estimator, "cqr | pcqr | scqr")
      ->required()
      ->check(CLI::IsMember({"cqr", "pcqr", "scqr"}));
  fit_cmd->add_option("--tau", fit_args.tau, "quantile level for cqr/pcqr");
  fit_cmd->add_option("--gamma", fit_args.gamma, "penalty weight for pcqr");
  fit_cmd->add_option("--taus", fit_args.taus_text, "comma list of quantiles for scqr");
  fit_cmd->add_option("--margin", fit_args.margin, "non-crossing margin C for scqr");
  fit_cmd->add_option("--tol", fit_args.tol, "solver tolerance");
  fit_cmd->add_option("--out", fit_args.out, "fit artifact path")->required();
  fit_cmd->add_option("--dump-program", fit_args.dump_program,
                      "write the assembled program as sparse triplets");

  SearchArgs search_args;
  auto* search_cmd =
      app.add_subcommand("search-gamma", "Scan the penalty grid until non-crossing");
  search_cmd->add_option("--csv", search_args.csv, "input CSV")->required();
  search_cmd->add_option("--tau1", search_args.tau1, "lower quantile")->required();
  search_cmd->add_option("--tau2", search_args.tau2, "upper quantile")->required();
  search_cmd->add_option("--step", search_args.step, "grid step");
  search_cmd->add_option("--gamma-max", search_args.gamma_max, "grid upper bound");
  search_cmd->add_option("--tol", search_args.tol, "solver tolerance");
  search_cmd->add_option("--out", search_args.out, "output directory")->required();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run Monte Carlo scenario batches");
  sim_cmd->add_option("--scenario", sim_args.scenario, "scenario JSON file")->required();
  sim_cmd->add_option("--estimators", sim_args.estimators_text,
                      "comma list overriding the scenario file");
  sim_cmd->add_option("--workers", sim_args.workers,
                      "replication worker threads (env CQRKIT_WORKERS)");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = sim_cmd->add_option("--seed", seed_opt, "override scenario seeds");
  sim_cmd->add_option("--tol", sim_args.tol, "solver tolerance");
  sim_cmd->add_option("--out", sim_args.out, "output directory")->required();

  CurveArgs curve_args;
  auto* curve_cmd = app.add_subcommand("export-curve", "Tabulate fitted quantile curves");
  curve_cmd->add_option("--fit", curve_args.fits, "fit artifact (repeatable)")->required();
  curve_cmd->add_option("--grid", curve_args.grid_text, "min:max:count (d = 1)");
  curve_cmd->add_option("--grid-file", curve_args.grid_file, "CSV of evaluation points");
  curve_cmd->add_option("--out", curve_args.out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (int i = 0; i < argc; ++i) command += std::string(i ? " " : "") + argv[i];

  try {
    if (*fit_cmd) return run_fit(fit_args);
    if (*search_cmd) return run_search(search_args);
    if (*sim_cmd) {
      if (*seed_flag) sim_args.seed = seed_opt;
      return run_simulate(sim_args, command);
    }
    if (*curve_cmd) return run_export_curve(curve_args);
  } catch (const cqrkit::GammaSearchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGammaExhausted;
  } catch (const cqrkit::FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const cqrkit::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
