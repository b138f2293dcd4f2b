#pragma once

#include "cqrkit/dataset.hpp"
#include "cqrkit/dgp.hpp"
#include "cqrkit/estimator.hpp"
#include "cqrkit/metrics.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqrkit {

/// Malformed input files (CSV, scenario, artifacts). Messages carry the
/// offending location where one exists.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- datasets

/// Strict reader for the `x1,...,xd,y` CSV layout (UTF-8, decimal point,
/// no thousands separators). Throws InputError with row/column context.
Dataset read_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

// ------------------------------------------------------------- fit output

struct ArtifactModelMetrics {
  double ramp_loss = 0.0;
  double coverage_error = 0.0;
  int n_pos = 0;
  int n_neg = 0;
  bool property_ok = false;
};

/// Structured fit output: hyperplanes, residual splits, objective, solver
/// diagnostics, and per-model calibration metrics. format_version 1.
struct FitArtifact {
  int format_version = 1;
  std::string estimator;  // "cqr" | "pcqr" | "scqr"
  Eigen::Index n = 0, d = 0;
  Eigen::VectorXd x_min, x_max;
  std::string solver_status = "Optimal";
  int solver_iterations = 0;
  KktResiduals solver_residuals;
  std::vector<QuantileModel> models;
  std::vector<Eigen::VectorXd> fitted;  // per model, at the training points
  std::vector<ArtifactModelMetrics> metrics;
  double margin = 0.0;  // scqr non-crossing margin constant
};

FitArtifact make_fit_artifact(const std::string& estimator, const Dataset& data,
                              const std::vector<QuantileModel>& models,
                              const KktResiduals& residuals, int iterations,
                              double margin = 0.0);

void write_fit_artifact(const FitArtifact& artifact, const std::filesystem::path& path);
FitArtifact read_fit_artifact(const std::filesystem::path& path);

// ---------------------------------------------------------- gamma reports

struct GammaReport {
  int format_version = 1;
  double gamma_star = 0.0;
  double step = 0.01;
  double gamma_max = 10.0;
  int iterations = 0;
  std::vector<int> crossing_counts;
};

void write_gamma_report(const GammaReport& report, const std::filesystem::path& path);
GammaReport read_gamma_report(const std::filesystem::path& path);

// -------------------------------------------------------------- scenarios

/// One Monte Carlo cell plus harness options, as read from a scenario file.
struct ScenarioSpec {
  ScenarioConfig cfg;
  std::vector<std::string> estimators = {"pcqr", "scqr"};
  double margin = 0.0;  // the non-crossing constant C
  double step = 0.01;
  double gamma_max = 10.0;
};

/// Parses a scenario file: either one JSON object with fields n, d,
/// sigma_sq, lambda, tau1, tau2, replications, seed, estimators, C, step,
/// gamma_max, or {"scenarios": [...]} holding several.
std::vector<ScenarioSpec> read_scenario_file(const std::filesystem::path& path);

// ------------------------------------------------------------ small CSVs

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace cqrkit
