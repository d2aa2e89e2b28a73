#pragma once

#include <optional>
#include <vector>

#include "protodiff/param_function.hpp"
#include "protodiff/param_operator.hpp"
#include "protodiff/paths.hpp"

namespace protodiff {

// Polynomials in t given by coefficients c0 + c1 t + c2 t^2 + ...
using ScalarPoly = std::vector<double>;
using VectorPoly = std::vector<Vector>;
using MatrixPoly = std::vector<Matrix>;

double poly_eval(const ScalarPoly& c, double t, int derivative = 0);
Vector poly_eval(const VectorPoly& c, double t, int derivative = 0);
Matrix poly_eval(const MatrixPoly& c, double t, int derivative = 0);

ScalarPath poly_path(ScalarPoly coeffs, double t_max = kDefaultTMax);
VectorPath poly_path(VectorPoly coeffs, double t_max = kDefaultTMax);

// A(t,y) = matrix(t) y + shift(t). Missing constants are computed on a
// t-grid from the spectrum of the symmetric part and the spectral norm.
ParamOperator affine_operator(const MatrixPoly& matrix, const VectorPoly& shift, double t_max,
                              std::optional<double> lipschitz = std::nullopt,
                              std::optional<double> strong_monotonicity = std::nullopt);

// g(t,x) = 1/2 x'P(t)x + q(t)'x + r(t).
ParamFunction smooth_quadratic(const MatrixPoly& P, const VectorPoly& q, const ScalarPoly& r);

// F_i(t,x) = 1/2 x'P_i x + r_i(t)'x + s_i(t).
struct QuadraticConstraint {
  Matrix P;
  VectorPoly r;
  ScalarPoly s;
};
ParamFunction quadratic_constraints(const std::vector<QuadraticConstraint>& rows);

}  // namespace protodiff
