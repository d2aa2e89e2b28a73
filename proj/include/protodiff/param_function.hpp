#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

#include "protodiff/ext_real.hpp"
#include "protodiff/paths.hpp"
#include "protodiff/types.hpp"

namespace protodiff {

// Feasibility slack used when evaluating constraint indicators, so that
// numerically computed projections count as members of C(t).
inline constexpr double kFeasibilityTol = 1e-13;

// g(t, .) convex and C^2 in x.
struct SmoothFunction {
  int dim = 0;
  std::function<double(double, const Vector&)> value;
  std::function<Vector(double, const Vector&)> grad_x;
  std::function<Matrix(double, const Vector&)> hess_xx;
  std::function<Vector(double, const Vector&)> hess_tx;
};

// x -> a(t) |x - b(t)| on the real line, a(t) > 0.
struct WeightedAbs1D {
  ScalarPath a;
  ScalarPath b;
};

// Second-order data of F at (0, x) in the joint variable (t, x):
// D^2 F_i(0,x)(1,w) = ftt_i + 2 ftx_i . w + w' fxx_i w.
struct ConstraintSecondOrder {
  Vector ftt;
  Matrix ftx;
  std::vector<Matrix> fxx;
};

// Indicator of C(t) = {x : F_i(t, x) <= 0, i = 1..count}, each F_i convex in x.
struct ConstraintIndicator {
  int dim = 0;
  int count = 0;
  std::function<Vector(double, const Vector&)> value;
  std::function<Matrix(double, const Vector&)> grad_x;  // count x dim
  std::function<Vector(double, const Vector&)> grad_t;
  std::function<std::vector<Matrix>(double, const Vector&)> hess_xx;
  std::function<ConstraintSecondOrder(const Vector&)> second_order;
  bool affine_in_x = false;
};

// Arbitrary convex function with a user-supplied Moreau prox oracle
// prox(t, x, rho) = argmin f(t, .) + |. - x|^2 / (2 rho).
struct CustomFunction {
  int dim = 0;
  std::function<ExtReal(double, const Vector&)> value;
  std::function<Vector(double, const Vector&, double)> prox;
};

class ParamFunction {
 public:
  using Variant = std::variant<SmoothFunction, WeightedAbs1D, ConstraintIndicator, CustomFunction>;

  explicit ParamFunction(Variant v);

  static ParamFunction zero(int dim);
  static ParamFunction weighted_abs(ScalarPath a, ScalarPath b);

  int dim() const { return dim_; }
  ExtReal operator()(double t, const Vector& x) const;
  std::string_view kind_name() const;

  const Variant& variant() const { return variant_; }
  template <class T>
  const T* get_if() const { return std::get_if<T>(&variant_); }

 private:
  Variant variant_;
  int dim_;
};

// Randomized properness / midpoint-convexity audit at sampled t.
// Throws AUDIT_FAILED naming the violating sample.
void audit_function(const ParamFunction& f, double t_max, std::uint64_t seed = kDefaultSeed,
                    int samples = kAuditSamples);

}  // namespace protodiff
