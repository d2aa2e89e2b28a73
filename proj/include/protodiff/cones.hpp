#pragma once

#include <vector>

#include "protodiff/param_function.hpp"
#include "protodiff/types.hpp"

namespace protodiff {

// {x : E x = 0, G x <= 0}.
struct PolyCone {
  int dim = 0;
  Matrix eq;
  Matrix ineq;

  static PolyCone whole_space(int dim);
  bool contains(const Vector& x, double tol = 1e-10) const;
  // Euclidean projection onto the cone.
  Vector project(const Vector& x) const;
};

struct Polytope {
  std::vector<Vector> vertices;
  int dim() const { return vertices.empty() ? 0 : static_cast<int>(vertices.front().size()); }
};

// Constraint i counts as active at y when F_i(0, y) >= -kActiveTol.
inline constexpr double kActiveTol = 1e-9;

std::vector<int> active_set(const ConstraintIndicator& c, const Vector& y);

// K(y|v) = {x : grad F_i(0,y) x <= 0 for active i, <x, v> = 0}.
// Throws INFEASIBLE_POINT when F(0, y) is not in the nonpositive orthant.
PolyCone cone_K(const ConstraintIndicator& c, const Vector& y, const Vector& v);

// Y(y|v) = {w >= 0 supported on the active set : grad_x F(0,y)' w = v}, as a
// vertex list in R^d (inactive coordinates are 0). Throws EMPTY_Y,
// UNBOUNDED_Y, DIMENSION_TOO_LARGE (more than 10 active constraints).
Polytope polytope_Y(const ConstraintIndicator& c, const Vector& y, const Vector& v);

double support_Y(const Polytope& Y, const Vector& q);

// min |J' w| over the unit simplex {w >= 0, sum w = 1}, rows of J being the
// active gradients. Zero means a nonnegative combination of the rows
// vanishes; +inf when J has no rows.
double surjectivity_bound(const Matrix& active_gradients);

}  // namespace protodiff
