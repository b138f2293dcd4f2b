#pragma once

#include "cqrkit/conic_program.hpp"

namespace cqrkit {

/// Solves a validated ConicProgram with a primal-dual interior-point method
/// (Mehrotra predictor-corrector) over a sparse regularized KKT system.
/// LP is the P = 0 special case. Throws std::invalid_argument when
/// validate(p) reports defects; pathological programs come back with
/// Infeasible / Unbounded / IterLimit statuses instead of throwing.
///
/// A call is single-threaded and self-contained; concurrent solves on
/// distinct programs are safe.
Solution solve(const ConicProgram& p, const SolverSettings& settings = {});

}  // namespace cqrkit
