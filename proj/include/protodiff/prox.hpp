#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "protodiff/param_function.hpp"
#include "protodiff/problem.hpp"
#include "protodiff/types.hpp"

namespace protodiff {

struct SolverParams {
  std::optional<double> rho;  // defaults to alpha / M^2
  double tol = 1e-10;
  int max_iter = 100000;
  // Use the three-branch formula for a 1-D affine operator with a weighted
  // absolute value instead of iterating.
  bool closed_form = true;
  std::optional<Vector> initial_guess;
  std::uint64_t seed = kDefaultSeed;
};

// Effective step: sp.rho or alpha/M^2. Throws INVALID_ARGUMENT unless
// 0 < rho < 2 alpha / M^2 and tol > 0.
double effective_rho(const ParamOperator& A, const SolverParams& sp);

// Euclidean projection of x onto {z : M z <= q}. Throws INFEASIBLE_SET.
Vector project_polyhedron(const Matrix& M, const Vector& q, const Vector& x);

// Projection onto C(t) = {z : F(t,z) <= 0} for convex, possibly nonlinear F,
// by sequential quadratic programming with a trust cap. The result is
// accepted only when the KKT residual is below tol.
Vector project_constraints(const ConstraintIndicator& c, double t, const Vector& x,
                           double tol = 1e-11);

// argmin_z f(t,z) + |z - x|^2 / (2 rho), with a subgradient-inequality check
// at 8 probe points.
Vector moreau_prox(const ParamFunction& f, double t, const Vector& x, double rho);

struct ViSolution {
  Vector y;
  int iterations = 0;
  double rho = 0.0;
  double fixed_point_residual = 0.0;
  bool closed_form = false;
  std::vector<double> step_norms;  // |y_{k+1} - y_k| per iteration
};

ViSolution solve_vi_detailed(const VIProblem& p, double t, const SolverParams& sp = {});
Vector solve_vi_at_t(const VIProblem& p, double t, const SolverParams& sp = {});

}  // namespace protodiff
