#include "cqrkit/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cqrkit {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double max_abs_entry(const SpMat& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

// Bounds and fixed variables folded away: only equalities and G z + s = h remain.
struct InternalForm {
  Eigen::Index nv = 0, p = 0, m = 0;
  SpMat P;  // nv x nv (no nonzeros when the quadratic cost is absent)
  VectorXd q;
  SpMat A;
  VectorXd b;
  SpMat G;
  VectorXd h;
  Eigen::Index m_orig = 0;            // leading rows of G coming from the program's G
  std::vector<Eigen::Index> ub_vars;  // then one row per finite upper bound
  std::vector<Eigen::Index> lb_vars;  // then one row per finite lower bound
  Eigen::Index p_orig = 0;            // leading rows of A from A_eq; rest pin lb==ub vars
  std::vector<Eigen::Index> fixed_vars;
};

InternalForm build_internal(const ConicProgram& prog) {
  InternalForm f;
  f.nv = prog.num_vars;
  f.P = prog.P.size() ? prog.P : SpMat(f.nv, f.nv);
  f.P.makeCompressed();
  f.q = prog.q;
  f.p_orig = prog.A_eq.rows();
  f.m_orig = prog.G.rows();

  const bool has_lb = prog.lb.size() == f.nv;
  const bool has_ub = prog.ub.size() == f.nv;
  for (Eigen::Index j = 0; j < f.nv; ++j) {
    const double lo = has_lb ? prog.lb[j] : -kInf;
    const double hi = has_ub ? prog.ub[j] : kInf;
    if (lo == hi) {
      f.fixed_vars.push_back(j);
    } else {
      if (hi < kInf) f.ub_vars.push_back(j);
      if (lo > -kInf) f.lb_vars.push_back(j);
    }
  }

  f.p = f.p_orig + static_cast<Eigen::Index>(f.fixed_vars.size());
  f.m = f.m_orig + static_cast<Eigen::Index>(f.ub_vars.size() + f.lb_vars.size());

  f.A.resize(f.p, f.nv);
  f.b.resize(f.p);
  {
    std::vector<Triplet> trips;
    trips.reserve(prog.A_eq.nonZeros() + f.fixed_vars.size());
    for (int k = 0; k < prog.A_eq.outerSize(); ++k)
      for (SpMat::InnerIterator it(prog.A_eq, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    for (size_t r = 0; r < f.fixed_vars.size(); ++r) {
      trips.emplace_back(f.p_orig + static_cast<Eigen::Index>(r), f.fixed_vars[r], 1.0);
      f.b[f.p_orig + static_cast<Eigen::Index>(r)] = prog.lb[f.fixed_vars[r]];
    }
    if (f.p_orig > 0) f.b.head(f.p_orig) = prog.b_eq;
    f.A.setFromTriplets(trips.begin(), trips.end());
  }

  f.G.resize(f.m, f.nv);
  f.h.resize(f.m);
  {
    std::vector<Triplet> trips;
    trips.reserve(prog.G.nonZeros() + f.ub_vars.size() + f.lb_vars.size());
    for (int k = 0; k < prog.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(prog.G, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    if (f.m_orig > 0) f.h.head(f.m_orig) = prog.h;
    Eigen::Index row = f.m_orig;
    for (auto j : f.ub_vars) {
      trips.emplace_back(row, j, 1.0);
      f.h[row++] = prog.ub[j];
    }
    for (auto j : f.lb_vars) {
      trips.emplace_back(row, j, -1.0);
      f.h[row++] = -prog.lb[j];
    }
    f.G.setFromTriplets(trips.begin(), trips.end());
  }
  f.A.makeCompressed();
  f.G.makeCompressed();
  return f;
}

struct Scaling {
  VectorXd D, Ea, Eg;
  double c = 1.0;
};

// Modified Ruiz equilibration of the KKT data plus cost normalization.
Scaling equilibrate(InternalForm& f, int iters = 10) {
  Scaling sc;
  sc.D = VectorXd::Ones(f.nv);
  sc.Ea = VectorXd::Ones(f.p);
  sc.Eg = VectorXd::Ones(f.m);

  VectorXd dcol(f.nv), da(f.p), dg(f.m);
  auto clamp_scale = [](double v) { return std::clamp(v, 1e-4, 1e4); };

  for (int it = 0; it < iters; ++it) {
    dcol.setZero();
    for (int k = 0; k < f.P.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.P, k); e; ++e)
        dcol[e.col()] = std::max(dcol[e.col()], std::abs(e.value()));
    for (int k = 0; k < f.A.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.A, k); e; ++e)
        dcol[e.col()] = std::max(dcol[e.col()], std::abs(e.value()));
    for (int k = 0; k < f.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.G, k); e; ++e)
        dcol[e.col()] = std::max(dcol[e.col()], std::abs(e.value()));
    for (Eigen::Index j = 0; j < f.nv; ++j)
      dcol[j] = dcol[j] > 0 ? clamp_scale(1.0 / std::sqrt(dcol[j])) : 1.0;

    da.setZero();
    for (int k = 0; k < f.A.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.A, k); e; ++e)
        da[e.row()] = std::max(da[e.row()], std::abs(e.value()));
    for (Eigen::Index i = 0; i < f.p; ++i)
      da[i] = da[i] > 0 ? clamp_scale(1.0 / std::sqrt(da[i])) : 1.0;

    dg.setZero();
    for (int k = 0; k < f.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.G, k); e; ++e)
        dg[e.row()] = std::max(dg[e.row()], std::abs(e.value()));
    for (Eigen::Index i = 0; i < f.m; ++i)
      dg[i] = dg[i] > 0 ? clamp_scale(1.0 / std::sqrt(dg[i])) : 1.0;

    for (int k = 0; k < f.P.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.P, k); e; ++e)
        e.valueRef() *= dcol[e.row()] * dcol[e.col()];
    for (int k = 0; k < f.A.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.A, k); e; ++e)
        e.valueRef() *= da[e.row()] * dcol[e.col()];
    for (int k = 0; k < f.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(f.G, k); e; ++e)
        e.valueRef() *= dg[e.row()] * dcol[e.col()];
    f.q.array() *= dcol.array();
    f.b.array() *= da.array();
    f.h.array() *= dg.array();
    sc.D.array() *= dcol.array();
    sc.Ea.array() *= da.array();
    sc.Eg.array() *= dg.array();

    // cost normalization (mean column norm of P vs ||q||_inf)
    double p_mean = 0.0;
    if (f.P.nonZeros() > 0) {
      VectorXd pc = VectorXd::Zero(f.nv);
      for (int k = 0; k < f.P.outerSize(); ++k)
        for (SpMat::InnerIterator e(f.P, k); e; ++e)
          pc[e.col()] = std::max(pc[e.col()], std::abs(e.value()));
      p_mean = pc.mean();
    }
    const double cost_scale = std::max(p_mean, inf_norm(f.q));
    if (cost_scale > 0) {
      const double ct = std::clamp(1.0 / cost_scale, 1e-6, 1e6);
      for (int k = 0; k < f.P.outerSize(); ++k)
        for (SpMat::InnerIterator e(f.P, k); e; ++e) e.valueRef() *= ct;
      f.q *= ct;
      sc.c *= ct;
    }
  }
  return sc;
}

class IpmSolver {
 public:
  IpmSolver(const ConicProgram& prog, const SolverSettings& settings)
      : settings_(settings), orig_(build_internal(prog)), scaled_(orig_) {
    if (settings_.equilibrate)
      sc_ = equilibrate(scaled_);
    else {
      sc_.D = VectorXd::Ones(orig_.nv);
      sc_.Ea = VectorXd::Ones(orig_.p);
      sc_.Eg = VectorXd::Ones(orig_.m);
    }
    prog_ = &prog;
    At_ = SpMat(scaled_.A.transpose());
    Gt_ = SpMat(scaled_.G.transpose());
    data_scale_ = std::max({1.0, max_abs_entry(orig_.A), max_abs_entry(orig_.G)});
  }

  Solution run();

 private:
  // The sparsity pattern is fixed; only the W diagonal changes per iteration.
  void build_kkt();
  bool factorize(const VectorXd& w);
  VectorXd solve_kkt(const VectorXd& rhs, const VectorXd& w) const;
  VectorXd kkt_apply(const VectorXd& x, const VectorXd& w) const;

  struct Unscaled {
    VectorXd z, y, lam, s;
    double objective;
    KktResiduals res;
  };
  Unscaled unscale(const VectorXd& z, const VectorXd& y, const VectorXd& lam,
                   const VectorXd& s) const;
  bool converged(const Unscaled& u) const;
  bool primal_infeasible(const Unscaled& u) const;
  bool dual_infeasible(const Unscaled& u) const;
  Solution finalize(SolveStatus status, const Unscaled& u, int iters, std::string msg) const;

  const SolverSettings settings_;
  const ConicProgram* prog_ = nullptr;
  InternalForm orig_;
  InternalForm scaled_;
  Scaling sc_;
  SpMat At_, Gt_;
  double data_scale_ = 1.0;

  SpMat kkt_;
  Eigen::SparseLU<SpMat> lu_;
  std::vector<Eigen::Index> diag_pos_;  // value-array index of every diagonal entry
  VectorXd p_diag_;                     // diagonal of scaled P
  // G-block entries rescaled by w^-1/2 each factorization (row symmetrization
  // keeps the inequality diagonal at -I and halves the condition exponent)
  struct GSlot {
    Eigen::Index value_index;
    double base;
    Eigen::Index ineq_row;
  };
  std::vector<GSlot> g_slots_;
  VectorXd w_isqrt_;
  double delta_ = 0.0;
  bool analyzed_ = false;
  double init_z_norm_ = 1.0;
};

void IpmSolver::build_kkt() {
  const auto nv = scaled_.nv, p = scaled_.p, m = scaled_.m;
  const Eigen::Index n = nv + p + m;
  std::vector<Triplet> trips;
  trips.reserve(scaled_.P.nonZeros() + 2 * (scaled_.A.nonZeros() + scaled_.G.nonZeros()) + n);
  for (int k = 0; k < scaled_.P.outerSize(); ++k)
    for (SpMat::InnerIterator it(scaled_.P, k); it; ++it)
      if (it.row() != it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, 0.0);
  for (int k = 0; k < scaled_.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(scaled_.A, k); it; ++it) {
      trips.emplace_back(nv + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), nv + it.row(), it.value());
    }
  for (int k = 0; k < scaled_.G.outerSize(); ++k)
    for (SpMat::InnerIterator it(scaled_.G, k); it; ++it) {
      trips.emplace_back(nv + p + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), nv + p + it.row(), it.value());
    }
  kkt_.resize(n, n);
  kkt_.setFromTriplets(trips.begin(), trips.end());
  kkt_.makeCompressed();

  p_diag_ = VectorXd::Zero(nv);
  for (int k = 0; k < scaled_.P.outerSize(); ++k)
    for (SpMat::InnerIterator it(scaled_.P, k); it; ++it)
      if (it.row() == it.col()) p_diag_[it.row()] = it.value();

  diag_pos_.assign(n, -1);
  const auto* outer = kkt_.outerIndexPtr();
  const auto* inner = kkt_.innerIndexPtr();
  const auto* vals = kkt_.valuePtr();
  g_slots_.clear();
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index idx = outer[col]; idx < outer[col + 1]; ++idx) {
      const Eigen::Index row = inner[idx];
      if (row == col) {
        diag_pos_[col] = idx;
        continue;
      }
      if (row >= nv + p)
        g_slots_.push_back({idx, vals[idx], row - nv - p});  // G block
      else if (col >= nv + p)
        g_slots_.push_back({idx, vals[idx], col - nv - p});  // G' block
    }
  }
  w_isqrt_ = VectorXd::Ones(m);
}

bool IpmSolver::factorize(const VectorXd& w) {
  const auto nv = scaled_.nv, p = scaled_.p;
  if (scaled_.m) w_isqrt_ = w.cwiseSqrt().cwiseInverse();
  double* vals = kkt_.valuePtr();
  for (const auto& slot : g_slots_)
    vals[slot.value_index] = slot.base * w_isqrt_[slot.ineq_row];
  // The pivoted factorization needs no shift on regular data; escalate a
  // diagonal shift only when rank deficiency actually breaks it.
  double local_delta = delta_;
  for (;;) {
    for (Eigen::Index j = 0; j < nv; ++j) vals[diag_pos_[j]] = p_diag_[j] + local_delta;
    for (Eigen::Index i = 0; i < p; ++i) vals[diag_pos_[nv + i]] = -local_delta;
    for (Eigen::Index i = 0; i < scaled_.m; ++i) vals[diag_pos_[nv + p + i]] = -1.0;
    if (!analyzed_) {
      lu_.analyzePattern(kkt_);
      analyzed_ = true;
    }
    lu_.factorize(kkt_);
    if (lu_.info() == Eigen::Success) {
      delta_ = local_delta;
      return true;
    }
    if (local_delta >= 1e-3) return false;
    local_delta = local_delta == 0.0 ? 1e-9 : local_delta * 100.0;
  }
}

// Operator of the row-symmetrized system (inequality unknowns are W^1/2 lam).
VectorXd IpmSolver::kkt_apply(const VectorXd& x, const VectorXd&) const {
  const auto nv = scaled_.nv, p = scaled_.p, m = scaled_.m;
  VectorXd out(nv + p + m);
  const auto dz = x.head(nv);
  const auto dy = x.segment(nv, p);
  VectorXd oz = scaled_.P * dz;
  if (p > 0) oz += At_ * dy;
  if (m > 0) oz += Gt_ * VectorXd(x.tail(m).cwiseProduct(w_isqrt_));
  out.head(nv) = oz;
  if (p > 0) out.segment(nv, p) = scaled_.A * dz;
  if (m > 0)
    out.tail(m) = (scaled_.G * dz).cwiseProduct(w_isqrt_) - x.tail(m);
  return out;
}

VectorXd IpmSolver::solve_kkt(const VectorXd& rhs, const VectorXd& w) const {
  VectorXd rhs_sym = rhs;
  const auto m = scaled_.m;
  if (m) rhs_sym.tail(m) = rhs_sym.tail(m).cwiseProduct(w_isqrt_);
  VectorXd x = lu_.solve(rhs_sym);
  const double rhs_scale = std::max(1.0, inf_norm(rhs_sym));
  double best_res = std::numeric_limits<double>::infinity();
  VectorXd best_x = x;
  for (int ref = 0; ref < 5; ++ref) {
    VectorXd res = rhs_sym - kkt_apply(x, w);
    const double rnorm = inf_norm(res);
    if (rnorm < best_res) {
      best_res = rnorm;
      best_x = x;
    }
    if (rnorm <= 1e-13 * rhs_scale) break;
    x += lu_.solve(res);
  }
  if (best_res < inf_norm(VectorXd(rhs_sym - kkt_apply(x, w)))) x = best_x;
  if (m) x.tail(m) = x.tail(m).cwiseProduct(w_isqrt_);
  return x;
}

IpmSolver::Unscaled IpmSolver::unscale(const VectorXd& z, const VectorXd& y,
                                       const VectorXd& lam, const VectorXd& s) const {
  Unscaled u;
  u.z = sc_.D.cwiseProduct(z);
  u.y = orig_.p ? VectorXd(sc_.Ea.cwiseProduct(y) / sc_.c) : VectorXd(0);
  u.lam = orig_.m ? VectorXd(sc_.Eg.cwiseProduct(lam) / sc_.c) : VectorXd(0);
  u.s = orig_.m ? VectorXd(s.cwiseQuotient(sc_.Eg)) : VectorXd(0);

  const VectorXd pz = orig_.P.nonZeros() ? VectorXd(orig_.P * u.z) : VectorXd::Zero(orig_.nv);
  u.objective = 0.5 * u.z.dot(pz) + orig_.q.dot(u.z);

  VectorXd rd = pz + orig_.q;
  if (orig_.p) rd += orig_.A.transpose() * u.y;
  if (orig_.m) rd += orig_.G.transpose() * u.lam;
  u.res.dual = inf_norm(rd);
  u.res.primal_eq = orig_.p ? inf_norm(VectorXd(orig_.A * u.z - orig_.b)) : 0.0;
  if (orig_.m) {
    const VectorXd viol = (orig_.G * u.z - orig_.h).cwiseMax(0.0);
    u.res.primal_ineq = inf_norm(viol);
    u.res.gap = std::abs(u.s.dot(u.lam));
  }
  return u;
}

bool IpmSolver::converged(const Unscaled& u) const {
  const double atol = settings_.abs_tol, rtol = settings_.rel_tol;
  const double eq_scale =
      orig_.p ? std::max(inf_norm(VectorXd(orig_.A * u.z)), inf_norm(orig_.b)) : 0.0;
  const double in_scale =
      orig_.m ? std::max(inf_norm(VectorXd(orig_.G * u.z)), inf_norm(orig_.h)) : 0.0;
  double du_scale = std::max(inf_norm(orig_.q),
                             orig_.P.nonZeros() ? inf_norm(VectorXd(orig_.P * u.z)) : 0.0);
  if (orig_.p) du_scale = std::max(du_scale, inf_norm(VectorXd(orig_.A.transpose() * u.y)));
  if (orig_.m) du_scale = std::max(du_scale, inf_norm(VectorXd(orig_.G.transpose() * u.lam)));

  return u.res.primal_eq <= atol + rtol * eq_scale &&
         u.res.primal_ineq <= atol + rtol * in_scale &&
         u.res.dual <= atol + rtol * du_scale &&
         u.res.gap <= atol + rtol * std::max(1.0, std::abs(u.objective));
}

bool IpmSolver::primal_infeasible(const Unscaled& u) const {
  const double nu = std::max(inf_norm(u.y), inf_norm(u.lam));
  if (nu < 1e2) return false;
  VectorXd atv = VectorXd::Zero(orig_.nv);
  if (orig_.p) atv += orig_.A.transpose() * u.y;
  if (orig_.m) atv += orig_.G.transpose() * u.lam;
  double theta = 0.0;
  if (orig_.p) theta += orig_.b.dot(u.y);
  if (orig_.m) theta += orig_.h.dot(u.lam);
  const double rhs_scale = std::max({1.0, inf_norm(orig_.b), inf_norm(orig_.h)});
  return inf_norm(atv) / nu <= 1e-7 * data_scale_ && theta / nu <= -1e-7 * rhs_scale;
}

bool IpmSolver::dual_infeasible(const Unscaled& u) const {
  const double zn = inf_norm(u.z);
  if (zn < 1e3 * std::max(1.0, init_z_norm_)) return false;
  const VectorXd zhat = u.z / zn;
  if (orig_.q.dot(zhat) > -1e-7 * std::max(1.0, inf_norm(orig_.q))) return false;
  if (orig_.P.nonZeros() && inf_norm(VectorXd(orig_.P * zhat)) > 1e-7 * data_scale_)
    return false;
  if (orig_.p && inf_norm(VectorXd(orig_.A * zhat)) > 1e-7 * data_scale_) return false;
  if (orig_.m && (orig_.G * zhat).maxCoeff() > 1e-7 * data_scale_) return false;
  return true;
}

Solution IpmSolver::finalize(SolveStatus status, const Unscaled& u, int iters,
                             std::string msg) const {
  Solution sol;
  sol.status = status;
  sol.z = u.z;
  sol.objective = u.objective;
  sol.residuals = u.res;
  sol.iterations = iters;
  sol.message = std::move(msg);

  sol.eq_duals = orig_.p_orig ? VectorXd(u.y.head(orig_.p_orig)) : VectorXd(0);
  sol.ineq_duals = orig_.m_orig ? VectorXd(u.lam.head(orig_.m_orig)) : VectorXd(0);
  sol.lb_duals = VectorXd::Zero(prog_->lb.size() ? orig_.nv : 0);
  sol.ub_duals = VectorXd::Zero(prog_->ub.size() ? orig_.nv : 0);
  Eigen::Index row = orig_.m_orig;
  for (auto j : orig_.ub_vars) {
    if (sol.ub_duals.size()) sol.ub_duals[j] = u.lam[row];
    ++row;
  }
  for (auto j : orig_.lb_vars) {
    if (sol.lb_duals.size()) sol.lb_duals[j] = u.lam[row];
    ++row;
  }
  return sol;
}

Solution IpmSolver::run() {
  const auto nv = scaled_.nv, p = scaled_.p, m = scaled_.m;
  build_kkt();

  if (m == 0) {
    // Equality-constrained (or unconstrained) program: one KKT solve decides.
    VectorXd w(0);
    if (!factorize(w)) {
      Unscaled u = unscale(VectorXd::Zero(nv), VectorXd::Zero(p), VectorXd(0), VectorXd(0));
      return finalize(SolveStatus::IterLimit, u, 0, "KKT factorization failed");
    }
    VectorXd rhs(nv + p);
    rhs.head(nv) = -scaled_.q;
    rhs.tail(p) = scaled_.b;
    const VectorXd x = solve_kkt(rhs, w);
    Unscaled u = unscale(x.head(nv), x.tail(p), VectorXd(0), VectorXd(0));
    if (converged(u)) return finalize(SolveStatus::Optimal, u, 1, "");
    if (u.res.primal_eq > 10 * settings_.abs_tol * std::max(1.0, inf_norm(orig_.b)))
      return finalize(SolveStatus::Infeasible, u, 1, "inconsistent equality constraints");
    return finalize(SolveStatus::Unbounded, u, 1, "stationarity unattainable");
  }

  // Initial point from one solve with W = I, then Mehrotra-style shifts.
  VectorXd w = VectorXd::Ones(m);
  if (!factorize(w)) {
    Unscaled u = unscale(VectorXd::Zero(nv), VectorXd::Zero(p), VectorXd::Ones(m),
                         VectorXd::Ones(m));
    return finalize(SolveStatus::IterLimit, u, 0, "KKT factorization failed");
  }
  VectorXd rhs(nv + p + m);
  rhs.head(nv) = -scaled_.q;
  rhs.segment(nv, p) = scaled_.b;
  rhs.tail(m) = scaled_.h;
  const VectorXd x0 = solve_kkt(rhs, w);
  VectorXd z = x0.head(nv);
  VectorXd y = x0.segment(nv, p);
  const VectorXd shat = scaled_.h - scaled_.G * z;
  const double shift = std::max(0.0, -1.5 * (shat.size() ? shat.minCoeff() : 0.0));
  VectorXd s = shat.array() + shift;
  VectorXd lam = s;
  const double dot = s.dot(lam);
  if (dot < 1e-12) {
    s.setOnes();
    lam.setOnes();
  } else {
    const double ds_shift = 0.5 * dot / lam.sum();
    const double dl_shift = 0.5 * dot / s.sum();
    s.array() += ds_shift;
    lam.array() += dl_shift;
  }
  init_z_norm_ = inf_norm(sc_.D.cwiseProduct(z));

  // Ratio test over components that still matter: once a pair has resolved
  // (one side negligible, the other clearly positive) its noise-level
  // direction must not freeze the whole step.
  auto boundary_step = [](const VectorXd& v, const VectorXd& dv, const VectorXd& partner) {
    const double v_scale = std::max(1e-300, v.maxCoeff());
    const double partner_scale = std::max(1e-300, partner.maxCoeff());
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (dv[i] >= 0.0) continue;
      if (v[i] <= 1e-12 * v_scale && partner[i] >= 1e-6 * partner_scale) continue;
      a = std::min(a, -v[i] / dv[i]);
    }
    return a;
  };

  const bool trace = std::getenv("CQRKIT_IPM_TRACE") != nullptr;
  int iter = 0;
  Unscaled u = unscale(z, y, lam, s);
  for (; iter < settings_.max_iters; ++iter) {
    u = unscale(z, y, lam, s);
    if (trace)
      std::fprintf(stderr,
                   "[ipm] it=%3d mu=%10.3e gap=%10.3e eq=%9.2e in=%9.2e du=%9.2e obj=%.8g\n",
                   iter, s.dot(lam) / static_cast<double>(m), u.res.gap, u.res.primal_eq,
                   u.res.primal_ineq, u.res.dual, u.objective);
    if (converged(u)) return finalize(SolveStatus::Optimal, u, iter, "");
    if (primal_infeasible(u))
      return finalize(SolveStatus::Infeasible, u, iter, "primal infeasibility certificate");
    if (dual_infeasible(u))
      return finalize(SolveStatus::Unbounded, u, iter, "dual infeasibility certificate");

    VectorXd rd = scaled_.P * z + scaled_.q + Gt_ * lam;
    if (p) rd += At_ * y;
    const VectorXd rp = p ? VectorXd(scaled_.A * z - scaled_.b) : VectorXd(0);
    const VectorXd rg = scaled_.G * z + s - scaled_.h;
    const double mu = s.dot(lam) / static_cast<double>(m);

    w = s.cwiseQuotient(lam).cwiseMax(1e-16).cwiseMin(1e16);
    if (!factorize(w)) break;

    rhs.head(nv) = -rd;
    rhs.segment(nv, p) = -rp;
    rhs.tail(m) = -rg + s;
    const VectorXd aff = solve_kkt(rhs, w);
    const VectorXd dl_a = aff.tail(m);
    const VectorXd ds_a = -(s + w.cwiseProduct(dl_a));
    if (!aff.allFinite() || !ds_a.allFinite()) break;

    const double alpha_aff = std::min(boundary_step(s, ds_a, lam), boundary_step(lam, dl_a, s));
    const double mu_aff =
        (s + alpha_aff * ds_a).dot(lam + alpha_aff * dl_a) / static_cast<double>(m);
    const double sigma = std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 0.0, 1.0);

    const VectorXd rc_over_lam =
        s + (ds_a.cwiseProduct(dl_a).array() - sigma * mu).matrix().cwiseQuotient(lam);
    rhs.tail(m) = -rg + rc_over_lam;
    VectorXd dir = solve_kkt(rhs, w);
    VectorXd dl = dir.tail(m);
    VectorXd ds = -(rc_over_lam + w.cwiseProduct(dl));
    if (!dir.allFinite() || !ds.allFinite()) break;

    double step = std::min(boundary_step(s, ds, lam), boundary_step(lam, dl, s));

    // Centrality correctors: push outlying complementarity products toward
    // the target on the same factorization while the step keeps improving.
    const double mu_target = std::max(sigma * mu, 1e-300);
    for (int cc = 0; cc < 2 && step < 0.995; ++cc) {
      const double aspire = std::min(1.0, step + 0.3);
      const VectorXd s_trial = s + aspire * ds;
      const VectorXd l_trial = lam + aspire * dl;
      const VectorXd v = s_trial.cwiseProduct(l_trial);
      const VectorXd t = v.cwiseMax(0.1 * mu_target).cwiseMin(10.0 * mu_target);
      if ((t - v).cwiseAbs().maxCoeff() <= 1e-14 * mu_target) break;
      rhs.head(nv).setZero();
      rhs.segment(nv, p).setZero();
      rhs.tail(m) = (v - t).cwiseQuotient(lam);
      const VectorXd extra = solve_kkt(rhs, w);
      const VectorXd dl_extra = extra.tail(m);
      const VectorXd ds_extra = -((v - t).cwiseQuotient(lam) + w.cwiseProduct(dl_extra));
      if (!extra.allFinite() || !ds_extra.allFinite()) break;
      const VectorXd ds_new = ds + ds_extra;
      const VectorXd dl_new = dl + dl_extra;
      const double step_new =
          std::min(boundary_step(s, ds_new, lam), boundary_step(lam, dl_new, s));
      if (step_new <= step + 0.01) break;
      dir += extra;
      ds = ds_new;
      dl = dl_new;
      step = step_new;
    }

    const double eta = std::min(0.999, std::max(0.99, 1.0 - 100.0 * mu));
    double alpha = std::min(1.0, eta * step);
    // keep complementarity from bouncing: back off until mu does not grow
    for (int bt = 0; bt < 8; ++bt) {
      const double mu_next =
          (s + alpha * ds).dot(lam + alpha * dl) / static_cast<double>(m);
      if (mu_next <= std::max((1.0 - 0.01 * alpha) * mu, 1e-2 * mu)) break;
      alpha *= 0.5;
    }
    z += alpha * dir.head(nv);
    s += alpha * ds;
    y += alpha * dir.segment(nv, p);
    lam += alpha * dl;
    s = s.cwiseMax(1e-250);
    lam = lam.cwiseMax(1e-250);
  }

  u = unscale(z, y, lam, s);
  if (converged(u)) return finalize(SolveStatus::Optimal, u, iter, "");
  return finalize(SolveStatus::IterLimit, u, iter,
                  "iteration limit before reaching tolerances");
}

}  // namespace

Solution solve(const ConicProgram& p, const SolverSettings& settings) {
  if (settings.abs_tol <= 0 || settings.rel_tol <= 0)
    throw std::invalid_argument("solver tolerances must be positive");
  if (settings.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const auto defects = validate(p);
  if (!defects.empty()) {
    std::string msg = "invalid program:";
    for (const auto& d : defects) msg += " [" + d + "]";
    throw std::invalid_argument(msg);
  }
  IpmSolver ipm(p, settings);
  return ipm.run();
}

}  // namespace cqrkit
