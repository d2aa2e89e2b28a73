#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "protodiff/cones.hpp"
#include "protodiff/ext_real.hpp"
#include "protodiff/param_function.hpp"

namespace protodiff {

// <slope, w> + offset on the cone, +inf off it.
struct LinearOnCone {
  Vector slope;
  PolyCone cone;
  double offset = 0.0;
};

// offset at w0, +inf elsewhere.
struct PointIndicator {
  Vector point;
  double offset = 0.0;
};

// 1/2 w'Qw + <c, w>.
struct QuadraticPlusLinear {
  Matrix Q;
  Vector c;
};

// 1/2 w'Qw + <c, w> + max_{y in Y} <y, 1/2 D^2F(0,y0)(1,w)> on K, +inf off K.
struct ConeQuadraticSupport {
  Matrix Q;
  Vector c;
  PolyCone K;
  Polytope Y;
  ConstraintSecondOrder curvature;

  // q(w)_i = 1/2 (ftt_i + 2 ftx_i . w + w' fxx_i w)
  Vector half_curvature(const Vector& w) const;
};

class DerivedSecondOrder {
 public:
  using Variant = std::variant<LinearOnCone, PointIndicator, QuadraticPlusLinear, ConeQuadraticSupport>;

  explicit DerivedSecondOrder(Variant v);

  int dim() const { return dim_; }
  ExtReal operator()(const Vector& w) const;
  std::string_view kind_name() const;
  const Variant& variant() const { return variant_; }
  template <class T>
  const T* get_if() const { return std::get_if<T>(&variant_); }

  // Euclidean projection onto the domain (a cone, a point, or everything).
  Vector project_to_domain(const Vector& w) const;

 private:
  Variant variant_;
  int dim_;
};

enum class CheckStatus { kPass, kFail, kSampledOnly };
std::string_view to_string(CheckStatus s);

struct HypothesisCheck {
  std::string clause;
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  std::string detail;
};
using HypothesisLog = std::vector<HypothesisCheck>;

// Closed-form second epi-derivative d2e f(x|v) for the catalog. Checks that
// v is a subgradient of f(0,.) at x (SUBGRADIENT_INVALID) and the variant's
// hypotheses (HYPOTHESIS_VIOLATED naming the failed one). Every check
// performed is appended to `log` when given. Conditions required for all t
// are sampled on [0, t_max].
DerivedSecondOrder d2e_closed_form(const ParamFunction& f, const Vector& x, const Vector& v,
                                   HypothesisLog* log = nullptr, double t_max = kDefaultTMax);

}  // namespace protodiff
