#include "cqrkit/simulate.hpp"

#include "cqrkit/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace cqrkit {

namespace {

bool wants(const ScenarioSpec& spec, const std::string& estimator) {
  return std::find(spec.estimators.begin(), spec.estimators.end(), estimator) !=
         spec.estimators.end();
}

MetricsRecord score_model(const QuantileModel& model, const Dataset& data,
                          const NoiseSpec& noise, double gamma_star, bool crossed) {
  MetricsRecord rec;
  rec.tau = model.tau;
  const Eigen::VectorXd qhat = evaluate_all(model, data.X);
  rec.ramp_loss = ramp_loss(data.y, qhat, model.tau);
  rec.coverage_error = coverage_error(data.y, qhat, model.tau);
  rec.mse = mse(model, data, noise);
  const auto qp = quantile_property_check(model);
  rec.n_pos = qp.n_pos;
  rec.n_neg = qp.n_neg;
  rec.property_ok = qp.property_ok;
  rec.gamma_star = gamma_star;
  rec.crossed_at_gamma0 = crossed;
  return rec;
}

ReplicationResult run_replication(const ScenarioSpec& spec, int rep,
                                  const SolverSettings& solver) {
  ReplicationResult result;
  result.replication = rep;
  try {
    const GeneratedSample sample = generate(spec.cfg, rep);
    GammaSearchOptions opts;
    opts.step = spec.step;
    opts.gamma_max = spec.gamma_max;
    opts.solver = solver;
    const GammaSearchResult gs =
        search_gamma(sample.data, spec.cfg.tau1, spec.cfg.tau2, opts);
    result.gamma_star = gs.gamma_star;
    result.crossed_at_gamma0 = gs.gamma_star > 0.0;

    if (wants(spec, "pcqr")) {
      result.records.emplace_back(
          "pcqr", score_model(gs.model_low, sample.data, spec.cfg.noise, gs.gamma_star,
                              result.crossed_at_gamma0));
      result.records.emplace_back(
          "pcqr", score_model(gs.model_high, sample.data, spec.cfg.noise, gs.gamma_star,
                              result.crossed_at_gamma0));
    }
    if (wants(spec, "scqr")) {
      const MultiQuantileModel multi =
          fit(build_scqr(sample.data, {spec.cfg.tau1, spec.cfg.tau2}, spec.margin), solver);
      for (const auto& model : multi.models)
        result.records.emplace_back(
            "scqr", score_model(model, sample.data, spec.cfg.noise, gs.gamma_star,
                                result.crossed_at_gamma0));
    }
    result.ok = true;
  } catch (const GammaSearchError& e) {
    result.failure = e.what();
  } catch (const FitError& e) {
    result.failure = e.what();
  }
  return result;
}

}  // namespace

ScenarioRunResult run_scenario(const ScenarioSpec& spec, int workers,
                               const SolverSettings& solver) {
  check_scenario(spec.cfg);
  ScenarioRunResult run;
  run.spec = spec;
  run.replications.resize(spec.cfg.replications);

  const int nthreads = std::max(1, std::min(workers, spec.cfg.replications));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= spec.cfg.replications) break;
      run.replications[rep] = run_replication(spec, rep, solver);
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<MetricsRecord> pcqr_records, scqr_records;
  std::map<long long, int> hist;
  for (const auto& rep : run.replications) {
    if (!rep.ok) {
      ++run.failures;
      continue;
    }
    const long long bin = std::llround(rep.gamma_star / spec.step);
    ++hist[bin];
    for (const auto& [est, rec] : rep.records) {
      if (est == "pcqr") pcqr_records.push_back(rec);
      if (est == "scqr") scqr_records.push_back(rec);
    }
  }
  for (const auto& [bin, count] : hist)
    run.gamma_histogram.emplace_back(bin * spec.step, count);
  if (wants(spec, "pcqr"))
    run.cells.push_back(aggregate(pcqr_records, spec.cfg, "pcqr"));
  if (wants(spec, "scqr"))
    run.cells.push_back(aggregate(scqr_records, spec.cfg, "scqr"));
  return run;
}

void write_run_outputs(const std::vector<ScenarioRunResult>& results,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ostringstream out;
    out << "scenario,replication,estimator,tau,gamma_star,crossed_at_gamma0,"
           "ramp_loss,coverage_error,mse,n_pos,n_neg,property_ok\n";
    for (size_t s = 0; s < results.size(); ++s) {
      for (const auto& rep : results[s].replications) {
        if (!rep.ok) continue;
        for (const auto& [est, rec] : rep.records) {
          out << s << ',' << rep.replication << ',' << est << ','
              << format_double(rec.tau) << ',' << format_double(rec.gamma_star) << ','
              << (rec.crossed_at_gamma0 ? 1 : 0) << ',' << format_double(rec.ramp_loss)
              << ',' << format_double(rec.coverage_error) << ',' << format_double(rec.mse)
              << ',' << rec.n_pos << ',' << rec.n_neg << ',' << (rec.property_ok ? 1 : 0)
              << '\n';
        }
      }
    }
    std::ofstream f(out_dir / "records.csv", std::ios::binary);
    f << out.str();
  }

  {
    std::ostringstream out;
    out << "scenario,n,d,sigma_sq,lambda,tau1,tau2,estimator,replications_used,"
           "replications_excluded,rl_tau1,cov_tau1,mse_tau1,rl_tau2,cov_tau2,mse_tau2\n";
    auto cellfield = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string();
    };
    for (size_t s = 0; s < results.size(); ++s) {
      const auto& cfg = results[s].spec.cfg;
      for (const auto& cell : results[s].cells) {
        out << s << ',' << cfg.n << ',' << cfg.d << ',' << format_double(cfg.noise.sigma_sq)
            << ',' << format_double(cfg.noise.lambda) << ',' << format_double(cfg.tau1)
            << ',' << format_double(cfg.tau2) << ',' << cell.estimator << ','
            << cell.replications_used << ',' << cell.replications_excluded << ','
            << cellfield(cell.mean_ramp_loss[0]) << ',' << cellfield(cell.mean_coverage_error[0])
            << ',' << cellfield(cell.mean_mse[0]) << ',' << cellfield(cell.mean_ramp_loss[1])
            << ',' << cellfield(cell.mean_coverage_error[1]) << ','
            << cellfield(cell.mean_mse[1]) << '\n';
      }
    }
    std::ofstream f(out_dir / "aggregate.csv", std::ios::binary);
    f << out.str();
  }

  {
    std::ostringstream out;
    out << "scenario,gamma_star,count\n";
    for (size_t s = 0; s < results.size(); ++s)
      for (const auto& [gamma, count] : results[s].gamma_histogram)
        out << s << ',' << format_double(gamma) << ',' << count << '\n';
    std::ofstream f(out_dir / "gamma_hist.csv", std::ios::binary);
    f << out.str();
  }
}

void write_manifest(const std::vector<ScenarioRunResult>& results,
                    const std::string& command, int workers, double wall_clock_seconds,
                    const std::filesystem::path& out_dir) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "run_manifest";
  j["toolkit_version"] = std::string(kVersion);
  j["command"] = command;
  j["workers"] = workers;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["outputs"] = {{"records", "records.csv"},
                  {"aggregate", "aggregate.csv"},
                  {"gamma_histogram", "gamma_hist.csv"}};
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& run : results) {
    const auto& spec = run.spec;
    nlohmann::json js;
    js["n"] = spec.cfg.n;
    js["d"] = spec.cfg.d;
    js["sigma_sq"] = spec.cfg.noise.sigma_sq;
    js["lambda"] = spec.cfg.noise.lambda;
    js["tau1"] = spec.cfg.tau1;
    js["tau2"] = spec.cfg.tau2;
    js["replications"] = spec.cfg.replications;
    js["seed"] = spec.cfg.seed;
    js["estimators"] = spec.estimators;
    js["C"] = spec.margin;
    js["step"] = spec.step;
    js["gamma_max"] = spec.gamma_max;
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& rep : run.replications)
      if (!rep.ok) failures.push_back({{"replication", rep.replication},
                                       {"message", rep.failure}});
    js["failures"] = std::move(failures);
    scenarios.push_back(std::move(js));
  }
  j["scenarios"] = std::move(scenarios);
  std::ofstream f(out_dir / "manifest.json", std::ios::binary);
  f << j.dump(1) << "\n";
}

}  // namespace cqrkit
