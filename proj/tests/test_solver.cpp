#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqrkit/solver.hpp"
#include "support/oracle.hpp"
#include "support/testutil.hpp"

#include <sstream>

using namespace cqrkit;
using namespace cqrkit::testing;

namespace {

ConicProgram one_var_lp() {
  // min z s.t. z >= 0
  ConicProgram prog;
  prog.num_vars = 1;
  prog.q = Eigen::VectorXd::Ones(1);
  prog.lb = Eigen::VectorXd::Zero(1);
  prog.ub = Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity());
  return prog;
}

void check_optimal_certificates(const ConicProgram& prog, const Solution& sol,
                                const SolverSettings& settings) {
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.residuals.primal_eq <= 10 * settings.abs_tol +
                                       10 * settings.rel_tol *
                                           std::max(1.0, sol.z.cwiseAbs().maxCoeff()));
  CHECK(sol.residuals.primal_ineq <= 10 * settings.abs_tol +
                                         10 * settings.rel_tol *
                                             std::max(1.0, sol.z.cwiseAbs().maxCoeff()));
  CHECK(sol.residuals.gap <=
        10 * settings.abs_tol + 10 * settings.rel_tol * std::max(1.0, std::abs(sol.objective)));
  // objective equals the quadratic form at z
  const Eigen::VectorXd pz =
      prog.P.size() ? Eigen::VectorXd(prog.P * sol.z) : Eigen::VectorXd::Zero(prog.num_vars);
  CHECK(std::abs(sol.objective - (0.5 * sol.z.dot(pz) + prog.q.dot(sol.z))) <= 1e-9 +
            1e-9 * std::abs(sol.objective));
}

}  // namespace

TEST_CASE("validate accepts a consistent one-variable LP") {
  CHECK(validate(one_var_lp()).empty());
}

TEST_CASE("validate flags dimension mismatches") {
  ConicProgram prog;
  prog.num_vars = 3;
  prog.q = Eigen::VectorXd::Zero(2);
  const auto defects = validate(prog);
  REQUIRE_FALSE(defects.empty());
  CHECK(defects[0].find("q has length 2") != std::string::npos);
}

TEST_CASE("validate flags non-finite entries") {
  ConicProgram prog = one_var_lp();
  prog.P.resize(1, 1);
  prog.P.insert(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto defects = validate(prog);
  REQUIRE_FALSE(defects.empty());
  CHECK(defects[0].find("non-finite") != std::string::npos);
}

TEST_CASE("validate flags an indefinite P") {
  ConicProgram prog = one_var_lp();
  prog.P.resize(1, 1);
  prog.P.insert(0, 0) = -1.0;
  const auto defects = validate(prog);
  REQUIRE_FALSE(defects.empty());
  CHECK(defects[0].find("positive semidefinite") != std::string::npos);
}

TEST_CASE("bound-active LP: min z s.t. z >= 3") {
  ConicProgram prog = one_var_lp();
  prog.lb[0] = 3.0;
  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));

  // same program with the bound expressed as a G row
  ConicProgram rowform;
  rowform.num_vars = 1;
  rowform.q = Eigen::VectorXd::Ones(1);
  rowform.G.resize(1, 1);
  rowform.G.insert(0, 0) = -1.0;
  rowform.h = Eigen::VectorXd::Constant(1, -3.0);
  const Solution sol2 = solve(rowform);
  REQUIRE(sol2.status == SolveStatus::Optimal);
  CHECK(sol2.objective == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("unconstrained quadratic: min 0.5 z^2 - z") {
  ConicProgram prog;
  prog.num_vars = 1;
  prog.q = Eigen::VectorXd::Constant(1, -1.0);
  prog.P.resize(1, 1);
  prog.P.insert(0, 0) = 1.0;
  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.objective == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("random LPs match the vertex-enumeration oracle") {
  Xoshiro256pp rng(20240811ULL);
  SolverSettings settings;
  int solved = 0;
  while (solved < 60) {
    const ConicProgram prog = random_program(rng, ProgramKind::Lp);
    const auto expected = oracle_objective(prog);
    if (!expected) continue;
    const Solution sol = solve(prog, settings);
    check_optimal_certificates(prog, sol, settings);
    CHECK(std::abs(sol.objective - *expected) <= 1e-6);
    ++solved;
  }
}

TEST_CASE("random QPs match the KKT-enumeration oracle") {
  Xoshiro256pp rng(77ULL);
  SolverSettings settings;
  int solved = 0;
  while (solved < 40) {
    const ProgramKind kind =
        solved % 3 == 2 ? ProgramKind::DiagonalSemidefiniteQp : ProgramKind::StrictQp;
    const ConicProgram prog = random_program(rng, kind);
    const auto expected = oracle_objective(prog);
    if (!expected) continue;
    const Solution sol = solve(prog, settings);
    check_optimal_certificates(prog, sol, settings);
    CHECK(std::abs(sol.objective - *expected) <= 1e-6);
    ++solved;
  }
}

TEST_CASE("LP objective agrees between absent P and explicit zero P") {
  Xoshiro256pp rng(5150ULL);
  for (int t = 0; t < 20; ++t) {
    ConicProgram prog = random_program(rng, ProgramKind::Lp);
    const Solution lp = solve(prog);
    ConicProgram qp = prog;
    qp.P.resize(prog.num_vars, prog.num_vars);  // structurally empty, semantically zero
    const Solution viaqp = solve(qp);
    REQUIRE(lp.status == SolveStatus::Optimal);
    REQUIRE(viaqp.status == SolveStatus::Optimal);
    CHECK(std::abs(lp.objective - viaqp.objective) <= 1e-7 * std::max(1.0, std::abs(lp.objective)));
  }
}

TEST_CASE("scaling q and h by a positive constant scales the objective") {
  Xoshiro256pp rng(31337ULL);
  for (int t = 0; t < 20; ++t) {
    ConicProgram prog = random_program(rng, ProgramKind::Lp);
    const double c = uniform(rng, 0.1, 50.0);
    const Solution base = solve(prog);
    ConicProgram scaled = prog;
    scaled.q *= c;
    scaled.h *= c;
    if (scaled.lb.size()) scaled.lb *= c;  // bounds are h-like rows
    const Solution after = solve(scaled);
    REQUIRE(base.status == SolveStatus::Optimal);
    CHECK(after.status == base.status);
    const double rel = std::abs(after.objective - c * c * base.objective) /
                       std::max(1.0, std::abs(c * c * base.objective));
    // q and h both scaled: argmin scales by c, objective by c^2 for the LP part
    CHECK(rel <= 1e-6);
  }
}

TEST_CASE("infeasible program is flagged") {
  // z >= 1 and z <= 0
  ConicProgram prog;
  prog.num_vars = 1;
  prog.q = Eigen::VectorXd::Ones(1);
  prog.G.resize(2, 1);
  prog.G.insert(0, 0) = -1.0;
  prog.G.insert(1, 0) = 1.0;
  prog.h.resize(2);
  prog.h << -1.0, 0.0;
  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded program is flagged") {
  // min -z s.t. z >= 0
  ConicProgram prog;
  prog.num_vars = 1;
  prog.q = Eigen::VectorXd::Constant(1, -1.0);
  prog.G.resize(1, 1);
  prog.G.insert(0, 0) = -1.0;
  prog.h = Eigen::VectorXd::Zero(1);
  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("unbounded free LP without constraints is flagged") {
  ConicProgram prog;
  prog.num_vars = 1;
  prog.q = Eigen::VectorXd::Ones(1);
  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("iteration limit is surfaced, not silently accepted") {
  Xoshiro256pp rng(99ULL);
  const ConicProgram prog = random_program(rng, ProgramKind::Lp);
  SolverSettings settings;
  settings.max_iters = 1;
  const Solution sol = solve(prog, settings);
  CHECK(sol.status == SolveStatus::IterLimit);
}

TEST_CASE("duplicated constraint rows are tolerated") {
  ConicProgram prog;
  prog.num_vars = 2;
  prog.q.resize(2);
  prog.q << 1.0, 2.0;
  prog.G.resize(4, 2);
  prog.G.insert(0, 0) = -1.0;
  prog.G.insert(1, 0) = -1.0;  // duplicate of row 0
  prog.G.insert(2, 1) = -1.0;
  prog.G.insert(3, 1) = -1.0;  // duplicate of row 2
  prog.h.resize(4);
  prog.h << 1.0, 1.0, 2.0, 2.0;
  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-5.0).epsilon(1e-7));
}

TEST_CASE("equal lower and upper bounds pin a variable") {
  ConicProgram prog;
  prog.num_vars = 2;
  prog.q.resize(2);
  prog.q << 1.0, 1.0;
  prog.lb.resize(2);
  prog.ub.resize(2);
  prog.lb << 4.0, 0.0;
  prog.ub << 4.0, std::numeric_limits<double>::infinity();
  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("invalid settings and defective programs throw") {
  ConicProgram prog = one_var_lp();
  SolverSettings bad;
  bad.abs_tol = 0.0;
  CHECK_THROWS_AS(solve(prog, bad), std::invalid_argument);
  bad = SolverSettings{};
  bad.max_iters = 0;
  CHECK_THROWS_AS(solve(prog, bad), std::invalid_argument);

  ConicProgram defective;
  defective.num_vars = 2;
  defective.q = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(solve(defective), std::invalid_argument);
}

TEST_CASE("triplet dump format") {
  ConicProgram prog;
  prog.num_vars = 2;
  prog.q.resize(2);
  prog.q << 1.0, -0.5;
  prog.G.resize(1, 2);
  prog.G.insert(0, 1) = 2.0;
  prog.h = Eigen::VectorXd::Constant(1, 3.0);
  prog.lb.resize(2);
  prog.lb << 0.0, -std::numeric_limits<double>::infinity();
  std::ostringstream os;
  dump_triplets(prog, os);
  CHECK(os.str() ==
        "q 0 0 1\n"
        "q 1 0 -0.5\n"
        "G 0 1 2\n"
        "h 0 0 3\n"
        "lb 0 0 0\n"
        "lb 1 0 -inf\n");
}
