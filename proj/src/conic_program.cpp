#include "cqrkit/conic_program.hpp"

#include <Eigen/SparseCholesky>

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace cqrkit {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "Unknown";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

bool all_finite(const Eigen::SparseMatrix<double>& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      if (!std::isfinite(it.value())) return false;
  return true;
}

bool is_diagonal(const Eigen::SparseMatrix<double>& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

}  // namespace

std::vector<std::string> validate(const ConicProgram& p) {
  std::vector<std::string> defects;
  const auto nv = p.num_vars;

  if (nv < 1) {
    defects.push_back("num_vars must be >= 1");
    return defects;
  }
  if (p.q.size() != nv)
    defects.push_back("q has length " + std::to_string(p.q.size()) +
                      ", expected num_vars = " + std::to_string(nv));
  else if (!p.q.allFinite())
    defects.push_back("q contains a non-finite entry");

  const bool has_p = p.P.rows() != 0 || p.P.cols() != 0;
  if (has_p) {
    if (p.P.rows() != nv || p.P.cols() != nv) {
      defects.push_back("P is " + std::to_string(p.P.rows()) + "x" +
                        std::to_string(p.P.cols()) + ", expected " +
                        std::to_string(nv) + "x" + std::to_string(nv));
    } else if (!all_finite(p.P)) {
      defects.push_back("P contains a non-finite entry");
    } else {
      Eigen::SparseMatrix<double> skew = p.P - Eigen::SparseMatrix<double>(p.P.transpose());
      double asym = 0.0;
      for (int k = 0; k < skew.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(skew, k); it; ++it)
          asym = std::max(asym, std::abs(it.value()));
      if (asym > 1e-12) {
        defects.push_back("P is not symmetric (max |P - P'| = " + format_double(asym) + ")");
      } else {
        // PSD check: exact for diagonal P, pivoted LDLT otherwise.
        bool psd = true;
        if (is_diagonal(p.P)) {
          for (int k = 0; k < p.P.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, k); it; ++it)
              if (it.value() < -1e-12) psd = false;
        } else if (nv <= 512) {
          Eigen::MatrixXd dense(p.P);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
          psd = es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        } else {
          Eigen::SparseMatrix<double> shifted = p.P;
          for (Eigen::Index i = 0; i < nv; ++i) shifted.coeffRef(i, i) += 1e-8;
          Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
          psd = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-8;
        }
        if (!psd) defects.push_back("P is not positive semidefinite");
      }
    }
  }

  auto check_block = [&](const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& rhs,
                         const char* mat_name, const char* rhs_name) {
    const bool present = m.rows() != 0 || m.cols() != 0 || rhs.size() != 0;
    if (!present) return;
    if (m.cols() != nv)
      defects.push_back(std::string(mat_name) + " has " + std::to_string(m.cols()) +
                        " columns, expected num_vars = " + std::to_string(nv));
    if (m.rows() != rhs.size())
      defects.push_back(std::string(mat_name) + " has " + std::to_string(m.rows()) +
                        " rows but " + rhs_name + " has length " + std::to_string(rhs.size()));
    if (!all_finite(m))
      defects.push_back(std::string(mat_name) + " contains a non-finite entry");
    if (!rhs.allFinite())
      defects.push_back(std::string(rhs_name) + " contains a non-finite entry");
  };
  check_block(p.A_eq, p.b_eq, "A_eq", "b_eq");
  check_block(p.G, p.h, "G", "h");

  auto check_bound = [&](const Eigen::VectorXd& b, const char* name) {
    if (b.size() == 0) return;
    if (b.size() != nv)
      defects.push_back(std::string(name) + " has length " + std::to_string(b.size()) +
                        ", expected num_vars = " + std::to_string(nv));
    for (Eigen::Index i = 0; i < b.size(); ++i)
      if (std::isnan(b[i])) {
        defects.push_back(std::string(name) + " contains NaN");
        break;
      }
  };
  check_bound(p.lb, "lb");
  check_bound(p.ub, "ub");
  if (p.lb.size() == p.ub.size() && p.lb.size() == nv) {
    for (Eigen::Index i = 0; i < nv; ++i)
      if (p.lb[i] > p.ub[i]) {
        defects.push_back("lb exceeds ub at variable " + std::to_string(i));
        break;
      }
  }
  return defects;
}

void dump_triplets(const ConicProgram& p, std::ostream& os) {
  auto emit_matrix = [&](const Eigen::SparseMatrix<double>& m, const char* tag) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
        os << tag << ' ' << it.row() << ' ' << it.col() << ' '
           << format_double(it.value()) << '\n';
  };
  auto emit_vector = [&](const Eigen::VectorXd& v, const char* tag) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      os << tag << ' ' << i << " 0 " << format_double(v[i]) << '\n';
  };
  emit_matrix(p.P, "P");
  emit_vector(p.q, "q");
  emit_matrix(p.A_eq, "A_eq");
  emit_vector(p.b_eq, "b_eq");
  emit_matrix(p.G, "G");
  emit_vector(p.h, "h");
  emit_vector(p.lb, "lb");
  emit_vector(p.ub, "ub");
}

}  // namespace cqrkit
