#include "cqrkit/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cqrkit {

namespace {

void check_pair(const Eigen::VectorXd& y, const Eigen::VectorXd& qhat, double tau) {
  if (y.size() == 0) throw std::invalid_argument("empty vectors");
  if (y.size() != qhat.size()) throw std::invalid_argument("length mismatch");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("tau must lie strictly inside (0, 1)");
}

}  // namespace

double ramp_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& qhat, double tau) {
  check_pair(y, qhat, tau);
  const double above = static_cast<double>((y.array() > qhat.array()).count());
  return std::abs(above / static_cast<double>(y.size()) - tau);
}

double coverage_error(const Eigen::VectorXd& y, const Eigen::VectorXd& qhat, double tau) {
  check_pair(y, qhat, tau);
  const double covered = static_cast<double>((y.array() <= qhat.array()).count());
  return std::abs(covered / static_cast<double>(y.size()) - tau);
}

double mse(const QuantileModel& model, const Dataset& data, const NoiseSpec& noise) {
  const Eigen::VectorXd qhat = evaluate_all(model, data.X);
  // F_eps^{-1}(tau) does not depend on x; shift the frontier once.
  const double offset = composed_error_quantile(model.tau, noise.sigma_v, noise.sigma_u);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double truth = frontier_value(data.X.row(i).transpose()) + offset;
    const double diff = qhat[i] - truth;
    acc += diff * diff;
  }
  return acc / static_cast<double>(data.n());
}

QuantilePropertyResult quantile_property_check(const QuantileModel& model,
                                               double strict_tol) {
  QuantilePropertyResult result;
  const auto n = model.eps_pos.size();
  result.n_pos = static_cast<int>((model.eps_pos.array() > strict_tol).count());
  result.n_neg = static_cast<int>((model.eps_neg.array() > strict_tol).count());
  const double nn = static_cast<double>(n);
  result.property_ok = result.n_pos / nn <= 1.0 - model.tau + 1e-9 &&
                       result.n_neg / nn <= model.tau + 1e-9;
  return result;
}

AggregateCell aggregate(const std::vector<MetricsRecord>& records,
                        const ScenarioConfig& scenario, const std::string& estimator) {
  AggregateCell cell;
  cell.scenario = scenario;
  cell.estimator = estimator;

  const std::array<double, 2> taus = {scenario.tau1, scenario.tau2};
  std::array<double, 2> rl{}, cov{}, ms{};
  std::array<int, 2> used{}, excluded{};
  for (const auto& rec : records) {
    int slot = -1;
    for (int t = 0; t < 2; ++t)
      if (std::abs(rec.tau - taus[t]) < 1e-12) slot = t;
    if (slot < 0) throw std::invalid_argument("record tau does not match the scenario");
    if (!rec.crossed_at_gamma0) {
      ++excluded[slot];
      continue;
    }
    ++used[slot];
    rl[slot] += rec.ramp_loss;
    cov[slot] += rec.coverage_error;
    ms[slot] += rec.mse;
  }
  for (int t = 0; t < 2; ++t) {
    if (used[t] > 0) {
      cell.mean_ramp_loss[t] = rl[t] / used[t];
      cell.mean_coverage_error[t] = cov[t] / used[t];
      cell.mean_mse[t] = ms[t] / used[t];
    }
  }
  cell.replications_used = used[0];
  cell.replications_excluded = excluded[0];
  return cell;
}

}  // namespace cqrkit
