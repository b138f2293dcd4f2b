#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqrkit/dgp.hpp"
#include "cqrkit/quadrature.hpp"
#include "cqrkit/rng.hpp"
#include "cqrkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace cqrkit;

TEST_CASE("normal quantile matches reference points and round-trips") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.05) == doctest::Approx(-1.6448536269514722).epsilon(1e-12));
  for (double p = 0.001; p < 1.0; p += 0.0007) {
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) <= 1e-13);
    CHECK(std::abs(normal_quantile(p) + normal_quantile(1.0 - p)) <= 1e-10);
  }
}

TEST_CASE("adaptive quadrature integrates the normal density") {
  const auto phi = [](double x) { return normal_pdf(x); };
  CHECK(std::abs(integrate_adaptive(phi, -40.0, 40.0, 1e-11) - 1.0) <= 1e-10);
  const auto xxphi = [](double x) { return x * x * normal_pdf(x); };
  CHECK(std::abs(integrate_adaptive(xxphi, -40.0, 40.0, 1e-11) - 1.0) <= 1e-9);
}

TEST_CASE("split_sigma honors the variance and ratio identities") {
  SUBCASE("pair (1.88, 1.66)") {
    const auto [sv, su] = split_sigma(1.88, 1.66);
    CHECK(std::abs(sv * sv + su * su - 1.88) <= 1e-12);
    CHECK(std::abs(su - 1.66 * sv) <= 1e-12);
    CHECK(sv * sv == doctest::Approx(0.5006).epsilon(5e-4));
    CHECK(su * su == doctest::Approx(1.3794).epsilon(5e-4));
  }
  SUBCASE("pair (1.35, 0.83)") {
    const auto [sv, su] = split_sigma(1.35, 0.83);
    CHECK(std::abs(sv * sv + su * su - 1.35) <= 1e-12);
    CHECK(std::abs(su - 0.83 * sv) <= 1e-12);
  }
  SUBCASE("lambda zero kills the inefficiency term") {
    const auto [sv, su] = split_sigma(1.0, 0.0);
    CHECK(sv == 1.0);
    CHECK(su == 0.0);
  }
  CHECK_THROWS_AS(split_sigma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(split_sigma(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(split_sigma(1.0, -0.5), std::invalid_argument);
}

namespace {

ScenarioConfig small_config(double sigma_sq, double lambda, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n = 40;
  cfg.d = 2;
  cfg.noise = NoiseSpec::from_sigma_lambda(sigma_sq, lambda);
  cfg.tau1 = 0.85;
  cfg.tau2 = 0.90;
  cfg.replications = 1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("generate is deterministic in (seed, replication_index)") {
  const ScenarioConfig cfg = small_config(1.35, 0.83, 42);
  const GeneratedSample a = generate(cfg, 3);
  const GeneratedSample b = generate(cfg, 3);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.y == b.data.y);
  CHECK(a.v == b.v);
  CHECK(a.u == b.u);
  const GeneratedSample c = generate(cfg, 4);
  CHECK(a.data.y != c.data.y);
}

TEST_CASE("generated samples satisfy the structural identities") {
  const ScenarioConfig cfg = small_config(1.88, 1.66, 7);
  const GeneratedSample s = generate(cfg, 0);
  CHECK((s.data.X.array() >= 1.0).all());
  CHECK((s.data.X.array() <= 10.0).all());
  CHECK((s.u.array() >= 0.0).all());
  const Eigen::VectorXd reconstructed = s.frontier + s.v - s.u;
  CHECK(s.data.y == reconstructed);  // bit-exact
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    CHECK(s.frontier[i] ==
          doctest::Approx(std::exp(0.8 * std::log(s.data.X(i, 0)) +
                                   0.4 * std::log(s.data.X(i, 1))))
              .epsilon(1e-12));
}

TEST_CASE("sigma_u = 0 puts every inefficiency draw at zero") {
  ScenarioConfig cfg = small_config(1.0, 0.0, 9);
  const GeneratedSample s = generate(cfg, 0);
  CHECK((s.u.array() == 0.0).all());
}

TEST_CASE("large-sample moments match the half-normal mean") {
  ScenarioConfig cfg;
  cfg.n = 1000000;
  cfg.d = 1;
  cfg.noise = NoiseSpec::from_sigma_lambda(1.88, 1.66);
  cfg.seed = 1234;
  const GeneratedSample s = generate(cfg, 0);
  const double target = cfg.noise.sigma_u * std::sqrt(2.0 / M_PI);
  const double sd = cfg.noise.sigma_u * std::sqrt(1.0 - 2.0 / M_PI);
  const double se = sd / std::sqrt(static_cast<double>(cfg.n));
  CHECK(std::abs(s.u.mean() - target) <= 3.0 * se);
  const double v_se = cfg.noise.sigma_v / std::sqrt(static_cast<double>(cfg.n));
  CHECK(std::abs(s.v.mean()) <= 3.0 * v_se);
}

TEST_CASE("composed error cdf degenerates to the Gaussian when sigma_u = 0") {
  for (double eps = -4.0; eps <= 4.0; eps += 0.25)
    CHECK(std::abs(composed_error_cdf(eps, 1.3, 0.0) - normal_cdf(eps / 1.3)) <= 1e-9);
}

TEST_CASE("composed error input validation") {
  CHECK_THROWS_AS(composed_error_cdf(0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(composed_error_cdf(0.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(composed_error_quantile(0.5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(composed_error_quantile(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(composed_error_quantile(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("composed error distribution skews negative") {
  CHECK(composed_error_cdf(0.0, 1.0, 1.0) > 0.5);
}

TEST_CASE("composed error cdf is nondecreasing and spans (0, 1)") {
  const auto [sv, su] = split_sigma(1.63, 1.24);
  const double sigma = std::hypot(sv, su);
  double prev = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const double eps = -12.0 * sigma + 24.0 * sigma * k / 999.0;
    const double value = composed_error_cdf(eps, sv, su);
    CHECK(value >= prev - 1e-12);
    prev = value;
  }
  CHECK(composed_error_cdf(-12.0 * sigma, sv, su) <= 1e-9);
  CHECK(composed_error_cdf(12.0 * sigma, sv, su) >= 1.0 - 1e-9);
}

TEST_CASE("composed error cdf matches a simulated empirical cdf") {
  const auto [sv, su] = split_sigma(1.88, 1.66);
  const int ndraw = 1000000;
  std::vector<double> draws(ndraw);
  Xoshiro256pp rng(2026);
  for (auto& x : draws)
    x = sv * normal_quantile(rng.next_unit_open()) -
        su * std::abs(normal_quantile(rng.next_unit_open()));
  std::sort(draws.begin(), draws.end());
  const double sigma = std::hypot(sv, su);
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double eps = -4.0 * sigma + 8.0 * sigma * k / 100.0;
    const double analytic = composed_error_cdf(eps, sv, su);
    const auto below = std::upper_bound(draws.begin(), draws.end(), eps) - draws.begin();
    const double empirical = static_cast<double>(below) / ndraw;
    worst = std::max(worst, std::abs(analytic - empirical));
  }
  CHECK(worst <= 0.003);  // DKW bound at n = 1e6 with margin
}

TEST_CASE("quantile round-trips through the cdf") {
  for (const auto& [sq, lam] :
       std::vector<std::pair<double, double>>{{1.88, 1.66}, {1.63, 1.24}, {1.35, 0.83}}) {
    const auto [sv, su] = split_sigma(sq, lam);
    for (double tau = 0.05; tau < 0.96; tau += 0.05) {
      const double q = composed_error_quantile(tau, sv, su);
      CHECK(std::abs(composed_error_cdf(q, sv, su) - tau) <= 1e-7);
    }
  }
}

TEST_CASE("quantile is the exact Gaussian quantile when sigma_u = 0") {
  for (double tau = 0.05; tau < 0.96; tau += 0.09)
    CHECK(composed_error_quantile(tau, 2.0, 0.0) == 2.0 * normal_quantile(tau));
}

TEST_CASE("true quantile composes the frontier and the error quantile") {
  const NoiseSpec gaussian_only = NoiseSpec::from_sigma_lambda(2.25, 0.0);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  CHECK(frontier_value(x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(true_quantile(x, 0.9, gaussian_only) ==
        doctest::Approx(1.0 + 1.5 * normal_quantile(0.9)).epsilon(1e-12));

  const NoiseSpec noise = NoiseSpec::from_sigma_lambda(1.35, 0.83);
  CHECK(true_quantile(x, 0.9, noise) ==
        doctest::Approx(1.0 + composed_error_quantile(0.9, noise.sigma_v, noise.sigma_u))
            .epsilon(1e-12));
}

TEST_CASE("true quantile is monotone in tau and in every coordinate") {
  const NoiseSpec noise = NoiseSpec::from_sigma_lambda(1.63, 1.24);
  Xoshiro256pp rng(55);
  for (int t = 0; t < 25; ++t) {
    Eigen::VectorXd x(3);
    for (int k = 0; k < 3; ++k) x[k] = 1.0 + 9.0 * rng.next_unit_open();
    const double tau_a = 0.05 + 0.9 * rng.next_unit_open();
    const double tau_b = 0.05 + 0.9 * rng.next_unit_open();
    const double lo_tau = std::min(tau_a, tau_b), hi_tau = std::max(tau_a, tau_b);
    CHECK(true_quantile(x, lo_tau, noise) <= true_quantile(x, hi_tau, noise) + 1e-9);

    Eigen::VectorXd x2 = x;
    const int coord = static_cast<int>(rng.next() % 3);
    x2[coord] = std::min(10.0, x2[coord] + 5.0 * rng.next_unit_open());
    CHECK(true_quantile(x, 0.7, noise) <= true_quantile(x2, 0.7, noise) + 1e-9);
  }
}

TEST_CASE("quantile simulated check at tau = 0.90") {
  const auto [sv, su] = split_sigma(1.35, 0.83);
  const int ndraw = 1000000;
  std::vector<double> draws(ndraw);
  Xoshiro256pp rng(777);
  for (auto& x : draws)
    x = sv * normal_quantile(rng.next_unit_open()) -
        su * std::abs(normal_quantile(rng.next_unit_open()));
  std::nth_element(draws.begin(), draws.begin() + ndraw / 10 * 9, draws.end());
  const double empirical = draws[ndraw / 10 * 9];
  CHECK(std::abs(composed_error_quantile(0.90, sv, su) - empirical) <= 0.015);
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg = small_config(1.35, 0.83, 1);
  cfg.n = 1;
  CHECK_THROWS_AS(check_scenario(cfg), std::invalid_argument);
  cfg = small_config(1.35, 0.83, 1);
  cfg.tau1 = 0.9;
  cfg.tau2 = 0.85;
  CHECK_THROWS_AS(check_scenario(cfg), std::invalid_argument);
  cfg = small_config(1.35, 0.83, 1);
  cfg.replications = 0;
  CHECK_THROWS_AS(check_scenario(cfg), std::invalid_argument);
}
