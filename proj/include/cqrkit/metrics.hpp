#pragma once

#include "cqrkit/dgp.hpp"
#include "cqrkit/estimator.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace cqrkit {

/// Scores of one fitted quantile function on one replication.
struct MetricsRecord {
  double tau = 0.0;
  double ramp_loss = 0.0;
  double coverage_error = 0.0;
  double mse = 0.0;
  int n_pos = 0;  // strict positive residuals
  int n_neg = 0;  // strict negative residuals
  bool property_ok = false;
  double gamma_star = 0.0;
  bool crossed_at_gamma0 = false;
};

/// Cross-replication means for one (scenario, estimator) cell. Replications
/// where plain fits already do not cross (gamma_star = 0) are excluded from
/// the means; an all-excluded cell keeps empty means instead of NaNs.
struct AggregateCell {
  ScenarioConfig scenario;
  std::string estimator;
  std::array<std::optional<double>, 2> mean_ramp_loss;
  std::array<std::optional<double>, 2> mean_coverage_error;
  std::array<std::optional<double>, 2> mean_mse;
  int replications_used = 0;
  int replications_excluded = 0;
};

/// | mean 1[y_i > qhat_i] - tau | with a strict inequality.
double ramp_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& qhat, double tau);

/// Companion calibration diagnostic | mean 1[y_i <= qhat_i] - tau |.
double coverage_error(const Eigen::VectorXd& y, const Eigen::VectorXd& qhat, double tau);

/// Mean squared distance between the fitted quantile function and the true
/// conditional quantile at the sample points.
double mse(const QuantileModel& model, const Dataset& data, const NoiseSpec& noise);

struct QuantilePropertyResult {
  int n_pos = 0;
  int n_neg = 0;
  bool property_ok = false;
};

/// Counts residuals strictly above strict_tol on each side and checks
/// n_pos/n <= 1 - tau and n_neg/n <= tau.
QuantilePropertyResult quantile_property_check(const QuantileModel& model,
                                               double strict_tol = 1e-6);

/// Means over the records of one (scenario, estimator) pair, keyed by the
/// scenario's tau pair; only records with crossed_at_gamma0 enter the means.
AggregateCell aggregate(const std::vector<MetricsRecord>& records,
                        const ScenarioConfig& scenario, const std::string& estimator);

}  // namespace cqrkit
