#include "cqrkit/dgp.hpp"

#include "cqrkit/quadrature.hpp"
#include "cqrkit/rng.hpp"
#include "cqrkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace cqrkit {

std::pair<double, double> split_sigma(double sigma_sq, double lambda) {
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("sigma_sq must be positive");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  const double sigma_v = std::sqrt(sigma_sq / (1.0 + lambda * lambda));
  return {sigma_v, lambda * sigma_v};
}

NoiseSpec NoiseSpec::from_sigma_lambda(double sigma_sq, double lambda) {
  const auto [sv, su] = split_sigma(sigma_sq, lambda);
  NoiseSpec spec;
  spec.sigma_sq = sigma_sq;
  spec.lambda = lambda;
  spec.sigma_v = sv;
  spec.sigma_u = su;
  return spec;
}

void check_scenario(const ScenarioConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("scenario needs n >= 2");
  if (cfg.d < 1) throw std::invalid_argument("scenario needs d >= 1");
  if (!(cfg.tau1 > 0.0 && cfg.tau1 < cfg.tau2 && cfg.tau2 < 1.0))
    throw std::invalid_argument("scenario needs 0 < tau1 < tau2 < 1");
  if (cfg.replications < 1) throw std::invalid_argument("scenario needs replications >= 1");
  if (!(cfg.noise.sigma_sq > 0.0)) throw std::invalid_argument("sigma_sq must be positive");
  if (cfg.noise.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
}

double frontier_value(const Eigen::VectorXd& x) {
  double f = 1.0;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    f *= std::pow(x[k], 0.8 / static_cast<double>(k + 1));
  return f;
}

GeneratedSample generate(const ScenarioConfig& cfg, int replication_index) {
  check_scenario(cfg);
  if (replication_index < 0) throw std::invalid_argument("replication index must be >= 0");

  Xoshiro256pp rng =
      make_stream_rng(cfg.seed, static_cast<std::uint64_t>(replication_index));
  GeneratedSample sample;
  sample.data.X.resize(cfg.n, cfg.d);
  for (Eigen::Index k = 0; k < cfg.d; ++k)
    for (Eigen::Index i = 0; i < cfg.n; ++i)
      sample.data.X(i, k) = 1.0 + 9.0 * rng.next_unit_open();

  sample.v.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    sample.v[i] = cfg.noise.sigma_v * normal_quantile(rng.next_unit_open());
  sample.u.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    sample.u[i] = cfg.noise.sigma_u * std::abs(normal_quantile(rng.next_unit_open()));

  sample.frontier.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    sample.frontier[i] = frontier_value(sample.data.X.row(i).transpose());
  sample.data.y = sample.frontier + sample.v - sample.u;
  return sample;
}

double composed_error_cdf(double eps, double sigma_v, double sigma_u) {
  if (!(sigma_v > 0.0)) throw std::invalid_argument("sigma_v must be positive");
  if (sigma_u < 0.0) throw std::invalid_argument("sigma_u must be nonnegative");
  const double sigma = std::hypot(sigma_v, sigma_u);
  const double lambda = sigma_u / sigma_v;

  const auto density = [&](double t) {
    return (2.0 / sigma) * normal_pdf(t / sigma) * normal_cdf(-t * lambda / sigma);
  };
  // Mass below min(-10 sigma, eps - 2 sigma) is under 2*Phi(-10) ~ 1.5e-23.
  const double lo = std::min(-10.0 * sigma, eps - 2.0 * sigma);
  const double cdf = integrate_adaptive(density, lo, eps, 5e-11);
  return std::clamp(cdf, 0.0, 1.0);
}

double composed_error_quantile(double tau, double sigma_v, double sigma_u) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("tau must lie strictly inside (0, 1)");
  if (!(sigma_v > 0.0)) throw std::invalid_argument("sigma_v must be positive");
  if (sigma_u < 0.0) throw std::invalid_argument("sigma_u must be nonnegative");
  if (sigma_u == 0.0) return sigma_v * normal_quantile(tau);

  const double sigma = std::hypot(sigma_v, sigma_u);
  const double lambda = sigma_u / sigma_v;
  const auto density = [&](double t) {
    return (2.0 / sigma) * normal_pdf(t / sigma) * normal_cdf(-t * lambda / sigma);
  };

  double a = -13.0 * sigma, b = 13.0 * sigma;
  double t = sigma * normal_quantile(tau);
  for (int it = 0; it < 100; ++it) {
    const double ft = composed_error_cdf(t, sigma_v, sigma_u) - tau;
    if (std::abs(ft) <= 1e-11) break;
    if (ft > 0.0)
      b = t;
    else
      a = t;
    const double deriv = density(t);
    double next = deriv > 0.0 ? t - ft / deriv : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - t) <= 1e-13 * sigma) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

double true_quantile(const Eigen::VectorXd& x, double tau, const NoiseSpec& noise) {
  return frontier_value(x) + composed_error_quantile(tau, noise.sigma_v, noise.sigma_u);
}

}  // namespace cqrkit
