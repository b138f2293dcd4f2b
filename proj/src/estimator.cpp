#include "cqrkit/estimator.hpp"

#include "cqrkit/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cqrkit {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quantile levels closer than this are one level for fitting purposes;
// near-duplicates would make non-crossing rows numerically meaningless.
constexpr double kMinTauGap = 1e-8;

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("tau must lie strictly inside (0, 1), got " +
                                format_double(tau));
}

// Shared constraint skeleton: per-block regression equalities, concavity
// rows, bounds, and the pinball cost. Returns the program with num_vars and
// bound vectors sized for J blocks.
ConicProgram build_skeleton(const Dataset& data, const std::vector<double>& taus,
                            const QuantileVarMap& map) {
  const auto n = map.n, d = map.d, J = map.J;
  ConicProgram prog;
  prog.num_vars = map.num_vars();

  prog.q = Eigen::VectorXd::Zero(prog.num_vars);
  prog.lb = Eigen::VectorXd::Constant(prog.num_vars, -kInf);
  prog.ub = Eigen::VectorXd::Constant(prog.num_vars, kInf);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) prog.lb[map.beta(i, k, j)] = 0.0;
      prog.lb[map.eps_pos(i, j)] = 0.0;
      prog.lb[map.eps_neg(i, j)] = 0.0;
      prog.q[map.eps_pos(i, j)] = taus[j];
      prog.q[map.eps_neg(i, j)] = 1.0 - taus[j];
    }
  }

  // Regression identities y_i = alpha_i + beta_i'x_i + eps_pos_i - eps_neg_i.
  const Eigen::Index eq_rows = J * n;
  prog.A_eq.resize(eq_rows, prog.num_vars);
  prog.b_eq.resize(eq_rows);
  {
    std::vector<Triplet> trips;
    trips.reserve(eq_rows * (d + 3));
    for (Eigen::Index j = 0; j < J; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index row = j * n + i;
        trips.emplace_back(row, map.alpha(i, j), 1.0);
        for (Eigen::Index k = 0; k < d; ++k)
          trips.emplace_back(row, map.beta(i, k, j), data.X(i, k));
        trips.emplace_back(row, map.eps_pos(i, j), 1.0);
        trips.emplace_back(row, map.eps_neg(i, j), -1.0);
        prog.b_eq[row] = data.y[i];
      }
    }
    prog.A_eq.setFromTriplets(trips.begin(), trips.end());
  }

  // Concavity: alpha_i + beta_i'x_i <= alpha_h + beta_h'x_i for all i != h.
  const Eigen::Index conc_rows = J * n * (n - 1);
  prog.G.resize(conc_rows, prog.num_vars);
  prog.h = Eigen::VectorXd::Zero(conc_rows);
  {
    std::vector<Triplet> trips;
    trips.reserve(conc_rows * 2 * (d + 1));
    Eigen::Index row = 0;
    for (Eigen::Index j = 0; j < J; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index h = 0; h < n; ++h) {
          if (h == i) continue;
          trips.emplace_back(row, map.alpha(i, j), 1.0);
          trips.emplace_back(row, map.alpha(h, j), -1.0);
          for (Eigen::Index k = 0; k < d; ++k) {
            trips.emplace_back(row, map.beta(i, k, j), data.X(i, k));
            trips.emplace_back(row, map.beta(h, k, j), -data.X(i, k));
          }
          ++row;
        }
      }
    }
    prog.G.setFromTriplets(trips.begin(), trips.end());
  }
  return prog;
}

QuantileModel unpack_block(const Eigen::VectorXd& z, const QuantileVarMap& map,
                           double tau, double gamma, Eigen::Index j) {
  QuantileModel model;
  model.tau = tau;
  model.gamma = gamma;
  model.alpha.resize(map.n);
  model.beta.resize(map.n, map.d);
  model.eps_pos.resize(map.n);
  model.eps_neg.resize(map.n);
  for (Eigen::Index i = 0; i < map.n; ++i) {
    model.alpha[i] = z[map.alpha(i, j)];
    for (Eigen::Index k = 0; k < map.d; ++k) model.beta(i, k) = z[map.beta(i, k, j)];
    model.eps_pos[i] = z[map.eps_pos(i, j)];
    model.eps_neg[i] = z[map.eps_neg(i, j)];
  }
  return model;
}

Solution solve_or_throw(const ConicProgram& prog, const SolverSettings& settings) {
  Solution sol = solve(prog, settings);
  if (sol.status != SolveStatus::Optimal) {
    throw FitError("fit failed: solver returned " + to_string(sol.status) +
                       (sol.message.empty() ? "" : " (" + sol.message + ")") +
                       "; residuals eq=" + format_double(sol.residuals.primal_eq) +
                       " ineq=" + format_double(sol.residuals.primal_ineq) +
                       " dual=" + format_double(sol.residuals.dual) +
                       " gap=" + format_double(sol.residuals.gap),
                   sol.status, sol.residuals, sol.iterations);
  }
  return sol;
}

}  // namespace

void check_dataset(const Dataset& data) {
  if (data.n() < 2) throw std::invalid_argument("dataset needs at least 2 observations");
  if (data.d() < 1) throw std::invalid_argument("dataset needs at least 1 input column");
  if (data.y.size() != data.n())
    throw std::invalid_argument("y length does not match the number of rows of X");
  if (!data.X.allFinite() || !data.y.allFinite())
    throw std::invalid_argument("dataset contains a non-finite entry");
}

CqrProgram build_cqr(const Dataset& data, double tau) {
  check_dataset(data);
  check_tau(tau);
  CqrProgram built;
  built.map = QuantileVarMap{data.n(), data.d(), 1};
  built.tau = tau;
  built.gamma = 0.0;
  built.program = build_skeleton(data, {tau}, built.map);
  return built;
}

CqrProgram build_pcqr(const Dataset& data, double tau, double gamma) {
  if (gamma < 0.0)
    throw std::invalid_argument("gamma must be nonnegative, got " + format_double(gamma));
  CqrProgram built = build_cqr(data, tau);
  built.gamma = gamma;
  if (gamma > 0.0) {
    std::vector<Triplet> trips;
    trips.reserve(built.map.n * built.map.d);
    for (Eigen::Index i = 0; i < built.map.n; ++i)
      for (Eigen::Index k = 0; k < built.map.d; ++k) {
        const Eigen::Index idx = built.map.beta(i, k);
        trips.emplace_back(idx, idx, 2.0 * gamma);
      }
    built.program.P.resize(built.program.num_vars, built.program.num_vars);
    built.program.P.setFromTriplets(trips.begin(), trips.end());
  }
  return built;
}

ScqrProgram build_scqr(const Dataset& data, const std::vector<double>& taus,
                       const Eigen::MatrixXd& C) {
  check_dataset(data);
  const auto J = static_cast<Eigen::Index>(taus.size());
  if (J < 2) throw std::invalid_argument("simultaneous estimation needs at least 2 quantiles");
  for (size_t j = 0; j < taus.size(); ++j) {
    check_tau(taus[j]);
    if (j > 0 && !(taus[j] > taus[j - 1] + kMinTauGap))
      throw std::invalid_argument("taus must be strictly increasing (min gap 1e-8)");
  }
  if (C.rows() != data.n() || C.cols() != J - 1)
    throw std::invalid_argument("C must be n x (J-1)");
  if ((C.array() < 0.0).any())
    throw std::invalid_argument("non-crossing margins C must be nonnegative");

  ScqrProgram built;
  built.map = QuantileVarMap{data.n(), data.d(), J};
  built.taus = taus;
  built.C = C;
  built.program = build_skeleton(data, taus, built.map);

  // Append non-crossing rows:
  //   alpha_{i,j} + beta_{i,j}'x_i + C_{i,j} <= alpha_{i,j+1} + beta_{i,j+1}'x_i.
  const auto& map = built.map;
  const Eigen::Index n = map.n, d = map.d;
  const Eigen::Index conc_rows = built.program.G.rows();
  const Eigen::Index nc_rows = n * (J - 1);
  SpMat G(conc_rows + nc_rows, built.program.num_vars);
  Eigen::VectorXd h(conc_rows + nc_rows);
  h.head(conc_rows) = built.program.h;
  {
    std::vector<Triplet> trips;
    trips.reserve(built.program.G.nonZeros() + nc_rows * 2 * (d + 1));
    for (int k = 0; k < built.program.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(built.program.G, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    Eigen::Index row = conc_rows;
    for (Eigen::Index j = 0; j + 1 < J; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        trips.emplace_back(row, map.alpha(i, j), 1.0);
        trips.emplace_back(row, map.alpha(i, j + 1), -1.0);
        for (Eigen::Index k = 0; k < d; ++k) {
          trips.emplace_back(row, map.beta(i, k, j), data.X(i, k));
          trips.emplace_back(row, map.beta(i, k, j + 1), -data.X(i, k));
        }
        h[row] = -C(i, j);
        ++row;
      }
    }
    G.setFromTriplets(trips.begin(), trips.end());
  }
  built.program.G = std::move(G);
  built.program.h = std::move(h);
  return built;
}

ScqrProgram build_scqr(const Dataset& data, const std::vector<double>& taus,
                       double margin) {
  if (margin < 0.0) throw std::invalid_argument("non-crossing margin must be nonnegative");
  const auto J = static_cast<Eigen::Index>(taus.size());
  if (J < 2) throw std::invalid_argument("simultaneous estimation needs at least 2 quantiles");
  return build_scqr(data, taus,
                    Eigen::MatrixXd::Constant(data.n(), J - 1, margin));
}

namespace {

void record_diagnostics(const Solution& sol, FitDiagnostics* diagnostics) {
  if (!diagnostics) return;
  diagnostics->status = sol.status;
  diagnostics->residuals = sol.residuals;
  diagnostics->iterations = sol.iterations;
}

}  // namespace

QuantileModel fit(const CqrProgram& built, const SolverSettings& settings,
                  FitDiagnostics* diagnostics) {
  const Solution sol = solve_or_throw(built.program, settings);
  record_diagnostics(sol, diagnostics);
  QuantileModel model = unpack_block(sol.z, built.map, built.tau, built.gamma, 0);
  model.objective = sol.objective;
  return model;
}

MultiQuantileModel fit(const ScqrProgram& built, const SolverSettings& settings,
                       FitDiagnostics* diagnostics) {
  const Solution sol = solve_or_throw(built.program, settings);
  record_diagnostics(sol, diagnostics);
  MultiQuantileModel multi;
  multi.taus = built.taus;
  multi.C = built.C;
  multi.objective = sol.objective;
  multi.models.reserve(built.taus.size());
  for (Eigen::Index j = 0; j < built.map.J; ++j) {
    QuantileModel m = unpack_block(sol.z, built.map, built.taus[j], 0.0, j);
    m.objective = built.taus[j] * m.eps_pos.sum() + (1.0 - built.taus[j]) * m.eps_neg.sum();
    multi.models.push_back(std::move(m));
  }
  return multi;
}

double evaluate(const QuantileModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.beta.cols())
    throw std::invalid_argument("evaluation point dimension mismatch");
  return (model.alpha + model.beta * x).minCoeff();
}

Eigen::VectorXd evaluate_all(const QuantileModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.beta.cols())
    throw std::invalid_argument("evaluation point dimension mismatch");
  // hyperplane values: (n_hyp x n_pts), colwise minimum.
  Eigen::MatrixXd vals = (model.beta * X.transpose()).colwise() + model.alpha;
  return vals.colwise().minCoeff().transpose();
}

int detect_crossing(const QuantileModel& model_low, const QuantileModel& model_high,
                    const Eigen::MatrixXd& points, double tol) {
  if (model_low.beta.cols() != model_high.beta.cols())
    throw std::invalid_argument("models have different input dimensions");
  const Eigen::VectorXd lo = evaluate_all(model_low, points);
  const Eigen::VectorXd hi = evaluate_all(model_high, points);
  return static_cast<int>((lo.array() > hi.array() + tol).count());
}

GammaSearchResult search_gamma(const Dataset& data, double tau1, double tau2,
                               const GammaSearchOptions& options) {
  check_dataset(data);
  check_tau(tau1);
  check_tau(tau2);
  if (!(tau1 + kMinTauGap < tau2)) throw std::invalid_argument("tau1 must be below tau2");
  if (!(options.step > 0.0)) throw std::invalid_argument("grid step must be positive");

  std::vector<int> counts;
  for (int k = 0;; ++k) {
    const double gamma = k * options.step;
    if (gamma > options.gamma_max + 1e-12) break;
    QuantileModel low = fit(build_pcqr(data, tau1, gamma), options.solver);
    QuantileModel high = fit(build_pcqr(data, tau2, gamma), options.solver);
    const int crossings = detect_crossing(low, high, data.X);
    counts.push_back(crossings);
    if (crossings == 0) {
      GammaSearchResult result;
      result.gamma_star = gamma;
      result.model_low = std::move(low);
      result.model_high = std::move(high);
      result.iterations = k + 1;
      result.crossing_counts = std::move(counts);
      return result;
    }
  }
  throw GammaSearchError("no non-crossing gamma found on the grid up to gamma_max = " +
                             format_double(options.gamma_max),
                         options.gamma_max, std::move(counts));
}

}  // namespace cqrkit
