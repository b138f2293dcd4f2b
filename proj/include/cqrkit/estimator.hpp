#pragma once

#include "cqrkit/conic_program.hpp"
#include "cqrkit/dataset.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cqrkit {

/// One fitted quantile function: a supporting hyperplane (alpha_i, beta_i)
/// per observation plus the signed residual split. Immutable after fit.
struct QuantileModel {
  double tau = 0.5;
  Eigen::VectorXd alpha;    // n
  Eigen::MatrixXd beta;     // n x d, >= 0
  Eigen::VectorXd eps_pos;  // n, >= 0
  Eigen::VectorXd eps_neg;  // n, >= 0
  double gamma = 0.0;       // 0 for the unpenalized estimator
  double objective = 0.0;
};

/// Jointly fitted quantile functions sharing one dataset, linked by
/// non-crossing rows with margins C (n x (J-1)).
struct MultiQuantileModel {
  std::vector<double> taus;
  std::vector<QuantileModel> models;
  Eigen::MatrixXd C;
  double objective = 0.0;
};

/// Variable layout of one quantile block: alpha (n), beta (n*d, row-major
/// per observation), eps_pos (n), eps_neg (n). Simultaneous programs stack
/// J such blocks.
struct QuantileVarMap {
  Eigen::Index n = 0, d = 0, J = 1;

  Eigen::Index block_size() const { return n * (d + 3); }
  Eigen::Index num_vars() const { return J * block_size(); }
  Eigen::Index alpha(Eigen::Index i, Eigen::Index j = 0) const {
    return j * block_size() + i;
  }
  Eigen::Index beta(Eigen::Index i, Eigen::Index k, Eigen::Index j = 0) const {
    return j * block_size() + n + i * d + k;
  }
  Eigen::Index eps_pos(Eigen::Index i, Eigen::Index j = 0) const {
    return j * block_size() + n * (d + 1) + i;
  }
  Eigen::Index eps_neg(Eigen::Index i, Eigen::Index j = 0) const {
    return j * block_size() + n * (d + 2) + i;
  }
};

struct CqrProgram {
  ConicProgram program;
  QuantileVarMap map;
  double tau = 0.5;
  double gamma = 0.0;
};

struct ScqrProgram {
  ConicProgram program;
  QuantileVarMap map;
  std::vector<double> taus;
  Eigen::MatrixXd C;
};

/// Raised when the solver does not come back Optimal; carries the solver
/// diagnostics so callers can report them.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, SolveStatus st, KktResiduals res, int iters)
      : std::runtime_error(msg), status(st), residuals(res), iterations(iters) {}

  SolveStatus status;
  KktResiduals residuals;
  int iterations = 0;
};

/// Raised when the penalty grid is exhausted without reaching non-crossing.
class GammaSearchError : public std::runtime_error {
 public:
  GammaSearchError(const std::string& msg, double gmax, std::vector<int> counts)
      : std::runtime_error(msg), gamma_max(gmax), crossing_counts(std::move(counts)) {}

  double gamma_max;
  std::vector<int> crossing_counts;
};

/// Quantile regression LP under concavity and monotonicity constraints:
/// n(d+3) variables, n regression equalities, n(n-1) pairwise concavity
/// rows, beta/eps bounded below by zero, cost tau on eps_pos and (1-tau)
/// on eps_neg.
CqrProgram build_cqr(const Dataset& data, double tau);

/// Same constraint set with an L2 penalty gamma * sum ||beta_i||^2 added to
/// the cost (diagonal quadratic term 2*gamma on every beta coordinate).
/// gamma = 0 builds exactly the unpenalized program.
CqrProgram build_pcqr(const Dataset& data, double tau, double gamma);

/// Simultaneous program over strictly increasing taus (J >= 2) with
/// per-block CQR structure plus n(J-1) non-crossing rows with margins C.
ScqrProgram build_scqr(const Dataset& data, const std::vector<double>& taus,
                       const Eigen::MatrixXd& C);
ScqrProgram build_scqr(const Dataset& data, const std::vector<double>& taus,
                       double margin = 0.0);

struct FitDiagnostics {
  SolveStatus status = SolveStatus::Optimal;
  KktResiduals residuals;
  int iterations = 0;
};

QuantileModel fit(const CqrProgram& built, const SolverSettings& settings = {},
                  FitDiagnostics* diagnostics = nullptr);
MultiQuantileModel fit(const ScqrProgram& built, const SolverSettings& settings = {},
                       FitDiagnostics* diagnostics = nullptr);

/// Lower-envelope representor min_h(alpha_h + beta_h' x): the tightest
/// concave monotone function consistent with the fitted hyperplanes.
double evaluate(const QuantileModel& model, const Eigen::VectorXd& x);

/// evaluate() at every row of X.
Eigen::VectorXd evaluate_all(const QuantileModel& model, const Eigen::MatrixXd& X);

/// Number of points where the low-tau fit exceeds the high-tau fit by more
/// than tol. Exact ties are touching, not crossing.
int detect_crossing(const QuantileModel& model_low, const QuantileModel& model_high,
                    const Eigen::MatrixXd& points, double tol = 1e-6);

struct GammaSearchOptions {
  double step = 0.01;
  double gamma_max = 10.0;
  SolverSettings solver;
};

struct GammaSearchResult {
  double gamma_star = 0.0;
  QuantileModel model_low;
  QuantileModel model_high;
  int iterations = 0;                // grid points examined
  std::vector<int> crossing_counts;  // one entry per grid point
};

/// Scans the penalty grid {0, step, 2*step, ...} and returns the smallest
/// grid value at which the two independently fitted penalized models do not
/// cross at any sample point. Throws GammaSearchError past gamma_max.
GammaSearchResult search_gamma(const Dataset& data, double tau1, double tau2,
                               const GammaSearchOptions& options = {});

}  // namespace cqrkit
