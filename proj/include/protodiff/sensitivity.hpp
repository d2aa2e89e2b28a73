#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "protodiff/problem.hpp"
#include "protodiff/prox.hpp"
#include "protodiff/second_order.hpp"

namespace protodiff {

// D_s A(y0)(w) = lim (A(tau, y0 + tau w') - A(0, y0)) / tau.
struct SemiDerivative {
  Vector y0;
  std::optional<Matrix> J;  // grad_x A(0, y0), when analytic
  std::optional<Vector> s;  // grad_t A(0, y0), when analytic
  std::function<Vector(const Vector&)> eval;
  double lipschitz = 0.0;
  double strong_monotonicity = 0.0;
  double richardson_tail = 0.0;  // 0 for the analytic form

  bool analytic() const { return J.has_value(); }
  Vector operator()(const Vector& w) const { return eval(w); }
};

// Analytic when A carries Jacobians; otherwise Richardson extrapolation over
// tau = h 2^-k, k = 0..6 (NOT_SEMIDIFFERENTIABLE when the tail exceeds 1e-6).
// The result is audited for the inherited constants M and alpha.
SemiDerivative semi_derivative(const ParamOperator& A, const Vector& y0, double h = 0.1,
                               std::uint64_t seed = kDefaultSeed);

// min 1/2 x'Qx + <linear, x> + max_{w in Y} <w, 1/2 D^2F(0,y0)(1,x)>  s.t. x in K,
// through the epigraph over the vertex list.
struct DerivativeQpResult {
  Vector x;
  double kkt_residual = 0.0;
  int outer_iterations = 0;
};
DerivativeQpResult constrained_derivative_qp(const PolyCone& K, const Polytope& Y, const Matrix& Q,
                                             const Vector& linear, const ConstraintSecondOrder& curvature);

// argmin D(y) + 1/2 y'Qy + <linear, y> for symmetric positive definite Q.
Vector minimize_second_order_model(const DerivedSecondOrder& D, const Matrix& Q, const Vector& linear);

// y with x' - S(y) in the subdifferential of D at y.
Vector solve_derivative_vi(const DerivedSecondOrder& D, const SemiDerivative& S, const Vector& x_prime,
                           const SolverParams& sp = {});

struct SensitivityReport {
  Vector y0;
  Vector v0;
  Vector x_prime;
  std::optional<Vector> yprime;
  std::optional<DerivedSecondOrder> second_order;
  std::optional<SemiDerivative> semi;
  HypothesisLog hypotheses;
  std::map<std::string, double> residuals;
  int solver_iterations = 0;
  bool closed_form_solve = false;
  double rho = 0.0;
  std::string failure;  // set when a hypothesis fails; yprime is then empty

  bool ok() const { return yprime.has_value(); }
};

// Runs every hypothesis check and records the outcome instead of throwing
// HYPOTHESIS_VIOLATED. Other errors (solver, domain) propagate.
SensitivityReport analyze_sensitivity(const VIProblem& p, const SolverParams& sp = {});

// As analyze_sensitivity, but throws HYPOTHESIS_VIOLATED naming the clause.
SensitivityReport solve_sensitivity(const VIProblem& p, const SolverParams& sp = {});

// minimize f(t,x) + g(t,x) - <l(t), x>: the operator is grad_x g.
struct MinProblemData {
  Vector y0;
  std::optional<DerivedSecondOrder> D;
  Matrix Q;
  Vector linear;
  Vector minimizer;
  Vector yprime;  // from solve_sensitivity on the same instance

  // Objective D(x) + 1/2 x'Qx + <linear, x>.
  ExtReal objective(const Vector& x) const;
};
ParamOperator gradient_operator(const SmoothFunction& g, double t_max, std::uint64_t seed = kDefaultSeed);
MinProblemData derivative_min_problem(const ParamFunction& f, const SmoothFunction& g, const VectorPath& l,
                                      const SolverParams& sp = {});

}  // namespace protodiff
