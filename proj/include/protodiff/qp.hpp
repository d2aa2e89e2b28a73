#pragma once

#include <vector>

#include "protodiff/types.hpp"

namespace protodiff {

// minimize 1/2 z'Hz + g'z  subject to  E z = e,  C z <= c.
struct QpProblem {
  Matrix hessian;
  Vector linear;
  Matrix eq;
  Vector eq_rhs;
  Matrix ineq;
  Vector ineq_rhs;

  static QpProblem unconstrained(Matrix hessian, Vector linear);
  int dim() const { return static_cast<int>(linear.size()); }
};

// Multipliers follow H z + g + E' eq_mult + C' ineq_mult = 0, ineq_mult >= 0.
struct QpResult {
  Vector z;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  std::vector<int> active;  // indices of inequality rows in the final working set
  int iterations = 0;
  double kkt_residual = 0.0;
};

// Max-norm KKT residual (stationarity, primal and dual feasibility, complementarity).
double kkt_residual(const QpProblem& qp, const Vector& z, const Vector& eq_mult,
                    const Vector& ineq_mult);

// Goldfarb-Idnani dual active-set method. Requires a positive definite
// Hessian; starts from the unconstrained minimizer, so no feasible point is
// needed. Throws QP_INFEASIBLE when a violated constraint cannot be added
// (a Farkas certificate that the constraint set is empty).
QpResult solve_qp_dual(const QpProblem& qp);

// Primal active-set method for a positive semidefinite Hessian, started from
// a feasible point. Throws QP_UNBOUNDED when a zero-curvature descent ray is
// not blocked by any constraint.
QpResult solve_qp_primal(const QpProblem& qp, const Vector& feasible_start);

}  // namespace protodiff
