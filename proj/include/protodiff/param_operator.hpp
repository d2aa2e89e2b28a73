#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "protodiff/types.hpp"

namespace protodiff {

// A(t, y) = matrix(t) y + shift(t). Carried alongside the evaluator when the
// operator is affine so that solvers and the semi-derivative can use it.
struct AffineForm {
  std::function<Matrix(double)> matrix;
  std::function<Vector(double)> shift;
  std::function<Matrix(double)> matrix_dt;
  std::function<Vector(double)> shift_dt;
};

// Parameterized operator A(t, .) : R^n -> R^n, uniformly M-Lipschitz and
// alpha-strongly monotone in y.
class ParamOperator {
 public:
  using Eval = std::function<Vector(double, const Vector&)>;
  using JacX = std::function<Matrix(double, const Vector&)>;
  using JacT = std::function<Vector(double, const Vector&)>;

  ParamOperator(int dim, Eval eval, double lipschitz, double strong_monotonicity,
                JacX jac_x = {}, JacT jac_t = {});

  static ParamOperator identity(int dim);
  static ParamOperator affine(AffineForm form, double lipschitz, double strong_monotonicity);

  int dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  double strong_monotonicity() const { return strong_monotonicity_; }

  Vector operator()(double t, const Vector& y) const;
  bool has_jacobians() const { return static_cast<bool>(jac_x_) && static_cast<bool>(jac_t_); }
  Matrix jac_x(double t, const Vector& y) const;
  Vector jac_t(double t, const Vector& y) const;
  const std::optional<AffineForm>& affine_form() const { return affine_; }

 private:
  int dim_;
  Eval eval_;
  double lipschitz_;
  double strong_monotonicity_;
  JacX jac_x_;
  JacT jac_t_;
  std::optional<AffineForm> affine_;
};

// Randomized Lipschitz / strong-monotonicity audit over sampled (t, y1, y2).
// Throws AUDIT_FAILED naming the violating sample.
void audit_operator(const ParamOperator& op, double t_max, std::uint64_t seed = kDefaultSeed,
                    int samples = kAuditSamples);

}  // namespace protodiff
