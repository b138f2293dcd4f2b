#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace cqrkit {

/// Sparse standard-form convex program
///
///   min  (1/2) z' P z + q' z
///   s.t. A_eq z = b_eq
///        G z <= h
///        lb <= z <= ub
///
/// P may be empty (0x0) to mean "no quadratic cost"; bounds may be empty
/// to mean unbounded, or hold +-inf entries per variable. Immutable once
/// handed to the solver; safe to share across threads.
struct ConicProgram {
  Eigen::Index num_vars = 0;
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A_eq;
  Eigen::VectorXd b_eq;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
};

struct SolverSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iters = 200;
  bool equilibrate = true;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

std::string to_string(SolveStatus status);

struct KktResiduals {
  double primal_eq = 0.0;    // ||A_eq z - b_eq||_inf
  double primal_ineq = 0.0;  // worst violation of G z <= h and the bounds
  double dual = 0.0;         // ||P z + q + A_eq' y + G' lam + bound terms||_inf
  double gap = 0.0;          // complementarity s' lam
};

struct Solution {
  SolveStatus status = SolveStatus::IterLimit;
  Eigen::VectorXd z;
  Eigen::VectorXd eq_duals;    // multipliers of A_eq z = b_eq
  Eigen::VectorXd ineq_duals;  // multipliers of G z <= h (>= 0)
  Eigen::VectorXd lb_duals;    // multipliers of z >= lb (>= 0)
  Eigen::VectorXd ub_duals;    // multipliers of z <= ub (>= 0)
  double objective = std::numeric_limits<double>::quiet_NaN();
  KktResiduals residuals;
  int iterations = 0;
  std::string message;
};

/// Structural checks: dimension consistency, symmetry/PSD-checkability of P,
/// finiteness. Returns human-readable defects; empty means solvable shape.
std::vector<std::string> validate(const ConicProgram& p);

/// Plain-text sparse-triplet dump (one "tag row col value" line per entry)
/// for offline inspection.
void dump_triplets(const ConicProgram& p, std::ostream& os);

/// Shortest round-trip decimal formatting used by all text outputs.
std::string format_double(double v);

}  // namespace cqrkit
