#include "support/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace cqrkit::testing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DenseForm {
  Eigen::MatrixXd P;  // nv x nv (zero when absent)
  Eigen::VectorXd q;
  Eigen::MatrixXd A;  // equalities (incl. pinned variables)
  Eigen::VectorXd b;
  Eigen::MatrixXd G;  // inequalities (incl. bounds)
  Eigen::VectorXd h;
};

DenseForm densify(const ConicProgram& prog) {
  const auto nv = prog.num_vars;
  DenseForm f;
  f.P = prog.P.size() ? Eigen::MatrixXd(prog.P) : Eigen::MatrixXd::Zero(nv, nv);
  f.q = prog.q;

  std::vector<Eigen::Index> fixed, lo, hi;
  const bool has_lb = prog.lb.size() == nv;
  const bool has_ub = prog.ub.size() == nv;
  for (Eigen::Index j = 0; j < nv; ++j) {
    const double l = has_lb ? prog.lb[j] : -kInf;
    const double u = has_ub ? prog.ub[j] : kInf;
    if (l == u)
      fixed.push_back(j);
    else {
      if (u < kInf) hi.push_back(j);
      if (l > -kInf) lo.push_back(j);
    }
  }

  const auto p = prog.A_eq.rows() + static_cast<Eigen::Index>(fixed.size());
  f.A = Eigen::MatrixXd::Zero(p, nv);
  f.b.resize(p);
  if (prog.A_eq.rows()) {
    f.A.topRows(prog.A_eq.rows()) = Eigen::MatrixXd(prog.A_eq);
    f.b.head(prog.A_eq.rows()) = prog.b_eq;
  }
  for (size_t r = 0; r < fixed.size(); ++r) {
    f.A(prog.A_eq.rows() + static_cast<Eigen::Index>(r), fixed[r]) = 1.0;
    f.b[prog.A_eq.rows() + static_cast<Eigen::Index>(r)] = prog.lb[fixed[r]];
  }

  const auto m = prog.G.rows() + static_cast<Eigen::Index>(hi.size() + lo.size());
  f.G = Eigen::MatrixXd::Zero(m, nv);
  f.h.resize(m);
  if (prog.G.rows()) {
    f.G.topRows(prog.G.rows()) = Eigen::MatrixXd(prog.G);
    f.h.head(prog.G.rows()) = prog.h;
  }
  Eigen::Index row = prog.G.rows();
  for (auto j : hi) {
    f.G(row, j) = 1.0;
    f.h[row++] = prog.ub[j];
  }
  for (auto j : lo) {
    f.G(row, j) = -1.0;
    f.h[row++] = -prog.lb[j];
  }
  return f;
}

bool feasible(const DenseForm& f, const Eigen::VectorXd& z, double tol) {
  if (f.A.rows() && (f.A * z - f.b).cwiseAbs().maxCoeff() > tol) return false;
  if (f.G.rows() && (f.G * z - f.h).maxCoeff() > tol) return false;
  return true;
}

double objective(const DenseForm& f, const Eigen::VectorXd& z) {
  return 0.5 * z.dot(f.P * z) + f.q.dot(z);
}

// All subsets of {0..m-1} with exactly k elements, visited via index vector.
template <class Fn>
void for_each_subset(Eigen::Index m, Eigen::Index k, Fn&& fn) {
  if (k < 0 || k > m) return;
  std::vector<Eigen::Index> idx(k);
  for (Eigen::Index i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(idx);
    Eigen::Index pos = k - 1;
    while (pos >= 0 && idx[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (Eigen::Index i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

std::optional<double> lp_vertex_enumeration(const DenseForm& f) {
  const auto nv = f.q.size();
  const auto p = f.A.rows();
  const auto m = f.G.rows();
  const auto k = nv - p;
  if (k < 0) return std::nullopt;

  const double scale = std::max({1.0, f.b.size() ? f.b.cwiseAbs().maxCoeff() : 0.0,
                                 f.h.size() ? f.h.cwiseAbs().maxCoeff() : 0.0});
  std::optional<double> best;
  auto try_active = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd M(nv, nv);
    Eigen::VectorXd rhs(nv);
    if (p) {
      M.topRows(p) = f.A;
      rhs.head(p) = f.b;
    }
    for (Eigen::Index r = 0; r < k; ++r) {
      M.row(p + r) = f.G.row(idx[static_cast<size_t>(r)]);
      rhs[p + r] = f.h[idx[static_cast<size_t>(r)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd z = lu.solve(rhs);
    if (!feasible(f, z, 1e-7 * scale)) return;
    const double obj = objective(f, z);
    if (!best || obj < *best) best = obj;
  };
  if (k == 0) {
    std::vector<Eigen::Index> empty;
    try_active(empty);
  } else {
    for_each_subset(m, k, try_active);
  }
  return best;
}

std::optional<double> qp_kkt_enumeration(const DenseForm& f) {
  const auto nv = f.q.size();
  const auto p = f.A.rows();
  const auto m = f.G.rows();
  const double scale = std::max({1.0, f.q.cwiseAbs().maxCoeff(),
                                 f.b.size() ? f.b.cwiseAbs().maxCoeff() : 0.0,
                                 f.h.size() ? f.h.cwiseAbs().maxCoeff() : 0.0});

  std::optional<double> best;
  auto try_active = [&](const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    const auto dim = nv + p + k;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    K.topLeftCorner(nv, nv) = f.P;
    rhs.head(nv) = -f.q;
    if (p) {
      K.block(nv, 0, p, nv) = f.A;
      K.block(0, nv, nv, p) = f.A.transpose();
      rhs.segment(nv, p) = f.b;
    }
    for (Eigen::Index r = 0; r < k; ++r) {
      K.row(nv + p + r).head(nv) = f.G.row(idx[static_cast<size_t>(r)]);
      K.col(nv + p + r).head(nv) = f.G.row(idx[static_cast<size_t>(r)]).transpose();
      rhs[nv + p + r] = f.h[idx[static_cast<size_t>(r)]];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
    const Eigen::VectorXd sol = cod.solve(rhs);
    if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) return;
    const Eigen::VectorXd z = sol.head(nv);
    if (!feasible(f, z, 1e-7 * scale)) return;
    for (Eigen::Index r = 0; r < k; ++r)
      if (sol[nv + p + r] < -1e-7 * scale) return;
    const double obj = objective(f, z);
    if (!best || obj < *best) best = obj;
  };

  for (Eigen::Index k = 0; k <= std::min(m, std::max<Eigen::Index>(nv - p, 0)); ++k) {
    if (k == 0) {
      std::vector<Eigen::Index> empty;
      try_active(empty);
    } else {
      for_each_subset(m, k, try_active);
    }
  }
  return best;
}

}  // namespace

std::optional<double> oracle_objective(const ConicProgram& prog) {
  const DenseForm f = densify(prog);
  const bool has_quadratic = prog.P.size() && prog.P.nonZeros() > 0;
  return has_quadratic ? qp_kkt_enumeration(f) : lp_vertex_enumeration(f);
}

}  // namespace cqrkit::testing
