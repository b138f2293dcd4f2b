#pragma once

#include "cqrkit/io.hpp"
#include "cqrkit/metrics.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cqrkit {

struct ReplicationResult {
  int replication = 0;
  bool ok = false;
  std::string failure;  // set when !ok
  double gamma_star = 0.0;
  bool crossed_at_gamma0 = false;
  std::vector<std::pair<std::string, MetricsRecord>> records;  // (estimator, record)
};

struct ScenarioRunResult {
  ScenarioSpec spec;
  std::vector<ReplicationResult> replications;  // ordered by replication index
  std::vector<AggregateCell> cells;             // one per requested estimator
  std::vector<std::pair<double, int>> gamma_histogram;  // (gamma_star, count)
  int failures = 0;
};

/// Runs every replication of one scenario. Replications are distributed
/// over `workers` threads with per-replication derived seeds, so the result
/// does not depend on the worker count. Per-replication solver failures are
/// recorded, not thrown.
ScenarioRunResult run_scenario(const ScenarioSpec& spec, int workers,
                               const SolverSettings& solver = {});

/// Writes records.csv, aggregate.csv and gamma_hist.csv for one or more
/// scenario runs into out_dir. All three files are deterministic functions
/// of the results.
void write_run_outputs(const std::vector<ScenarioRunResult>& results,
                       const std::filesystem::path& out_dir);

/// Writes manifest.json (command line, config snapshot, seeds, toolkit
/// version, wall clock, failure list). Everything except wall_clock_seconds
/// is deterministic.
void write_manifest(const std::vector<ScenarioRunResult>& results,
                    const std::string& command, int workers, double wall_clock_seconds,
                    const std::filesystem::path& out_dir);

}  // namespace cqrkit
