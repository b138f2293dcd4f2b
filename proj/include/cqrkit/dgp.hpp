#pragma once

#include "cqrkit/dataset.hpp"

#include <cstdint>

namespace cqrkit {

/// Noise/inefficiency split in the sigma_sq = sigma_v^2 + sigma_u^2,
/// lambda = sigma_u / sigma_v parameterization.
struct NoiseSpec {
  double sigma_sq = 1.0;
  double lambda = 0.0;
  double sigma_v = 1.0;
  double sigma_u = 0.0;

  static NoiseSpec from_sigma_lambda(double sigma_sq, double lambda);
};

/// (sigma_v, sigma_u) with sigma_v = sqrt(sigma_sq / (1 + lambda^2)) and
/// sigma_u = lambda * sigma_v. Rejects non-positive sigma_sq.
std::pair<double, double> split_sigma(double sigma_sq, double lambda);

/// One Monte Carlo cell.
struct ScenarioConfig {
  Eigen::Index n = 99;
  Eigen::Index d = 2;
  NoiseSpec noise;
  double tau1 = 0.85;
  double tau2 = 0.90;
  int replications = 1;
  std::uint64_t seed = 0;
};

void check_scenario(const ScenarioConfig& cfg);

struct GeneratedSample {
  Dataset data;
  Eigen::VectorXd frontier;  // prod_k x_k^{0.8/k} per observation
  Eigen::VectorXd v;         // Gaussian noise draws
  Eigen::VectorXd u;         // half-normal inefficiency draws (>= 0)
};

/// Production frontier prod_{k=1}^{d} x_k^{0.8/k}.
double frontier_value(const Eigen::VectorXd& x);

/// Draws one replication: x ~ U[1,10] i.i.d. (filled column-major), then
/// v ~ N(0, sigma_v^2), then u = |N(0, sigma_u^2)|, all from a stream fully
/// determined by (cfg.seed, replication_index). y = frontier + v - u.
GeneratedSample generate(const ScenarioConfig& cfg, int replication_index);

/// CDF of the composed error v - u (normal minus half-normal), integrated
/// from the analytic density (2/sigma) phi(e/sigma) Phi(-e lambda/sigma) by
/// adaptive quadrature to absolute accuracy below 1e-9.
double composed_error_cdf(double eps, double sigma_v, double sigma_u);

/// Inverse of composed_error_cdf by safeguarded Newton root-finding;
/// reduces to the exact Gaussian quantile when sigma_u = 0.
double composed_error_quantile(double tau, double sigma_v, double sigma_u);

/// True conditional quantile frontier_value(x) + F_eps^{-1}(tau).
double true_quantile(const Eigen::VectorXd& x, double tau, const NoiseSpec& noise);

}  // namespace cqrkit
