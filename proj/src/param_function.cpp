#include "protodiff/param_function.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int variant_dim(const ParamFunction::Variant& v) {
  return std::visit(Overloaded{
                        [](const SmoothFunction& s) { return s.dim; },
                        [](const WeightedAbs1D&) { return 1; },
                        [](const ConstraintIndicator& c) { return c.dim; },
                        [](const CustomFunction& c) { return c.dim; },
                    },
                    v);
}

}  // namespace

ParamFunction::ParamFunction(Variant v) : variant_(std::move(v)), dim_(variant_dim(variant_)) {
  if (dim_ <= 0) throw Error(ErrorCode::kInvalidArgument, "function dimension must be positive");
  std::visit(Overloaded{
                 [](const SmoothFunction& s) {
                   if (!s.value || !s.grad_x || !s.hess_xx || !s.hess_tx) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "smooth function needs value, grad_x, hess_xx, hess_tx");
                   }
                 },
                 [](const WeightedAbs1D&) {},
                 [](const ConstraintIndicator& c) {
                   if (c.count <= 0 || !c.value || !c.grad_x || !c.grad_t || !c.hess_xx ||
                       !c.second_order) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "constraint indicator needs count > 0 and all derivative maps");
                   }
                 },
                 [](const CustomFunction& c) {
                   if (!c.value) throw Error(ErrorCode::kInvalidArgument, "custom function without value");
                 },
             },
             variant_);
}

ParamFunction ParamFunction::zero(int dim) {
  SmoothFunction s;
  s.dim = dim;
  s.value = [](double, const Vector&) { return 0.0; };
  s.grad_x = [dim](double, const Vector&) { return Vector(Vector::Zero(dim)); };
  s.hess_xx = [dim](double, const Vector&) { return Matrix(Matrix::Zero(dim, dim)); };
  s.hess_tx = [dim](double, const Vector&) { return Vector(Vector::Zero(dim)); };
  return ParamFunction(std::move(s));
}

ParamFunction ParamFunction::weighted_abs(ScalarPath a, ScalarPath b) {
  return ParamFunction(WeightedAbs1D{std::move(a), std::move(b)});
}

ExtReal ParamFunction::operator()(double t, const Vector& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "function argument dimension");
  return std::visit(
      Overloaded{
          [&](const SmoothFunction& s) { return ExtReal::from_double(s.value(t, x)); },
          [&](const WeightedAbs1D& w) { return ExtReal::from_double(w.a(t) * std::abs(x(0) - w.b(t))); },
          [&](const ConstraintIndicator& c) {
            const Vector F = c.value(t, x);
            return F.maxCoeff() <= kFeasibilityTol ? ExtReal(0.0) : ExtReal::plus_inf();
          },
          [&](const CustomFunction& c) {
            const ExtReal v = c.value(t, x);
            if (v.is_minus_inf()) {
              throw Error(ErrorCode::kAuditFailed, "custom function evaluated to -inf");
            }
            return v;
          },
      },
      variant_);
}

std::string_view ParamFunction::kind_name() const {
  return std::visit(Overloaded{
                        [](const SmoothFunction&) { return std::string_view("smooth"); },
                        [](const WeightedAbs1D&) { return std::string_view("weighted_abs_1d"); },
                        [](const ConstraintIndicator&) { return std::string_view("constraint_indicator"); },
                        [](const CustomFunction&) { return std::string_view("custom"); },
                    },
                    variant_);
}

void audit_function(const ParamFunction& f, double t_max, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unif_t(0.0, t_max);
  const int n = f.dim();
  auto fail = [](int k, double t, const std::string& what) {
    std::ostringstream os;
    os << "sample " << k << " at t=" << t << ": " << what;
    throw Error(ErrorCode::kAuditFailed, os.str());
  };

  if (const auto* w = f.get_if<WeightedAbs1D>()) {
    for (int k = 0; k <= 16; ++k) {
      const double t = t_max * k / 16.0;
      if (!(w->a(t) > 0.0)) fail(k, t, "weight a(t) must be > 0");
    }
  }

  bool any_finite = false;
  for (int k = 0; k < samples; ++k) {
    const double t = (k == 0) ? 0.0 : unif_t(rng);
    Vector x(n), y(n);
    for (int i = 0; i < n; ++i) x(i) = normal(rng);
    for (int i = 0; i < n; ++i) y(i) = normal(rng);
    const ExtReal fx = f(t, x);
    const ExtReal fy = f(t, y);
    const ExtReal fm = f(t, 0.5 * (x + y));
    if (fx.is_minus_inf() || fy.is_minus_inf() || fm.is_minus_inf()) fail(k, t, "value -inf");
    any_finite = any_finite || fx.is_finite() || fy.is_finite() || fm.is_finite();
    if (fx.is_finite() && fy.is_finite()) {
      const double avg = 0.5 * (fx.value() + fy.value());
      const double slack = 1e-9 * (1.0 + std::abs(fx.value()) + std::abs(fy.value()));
      if (!fm.is_finite() || fm.value() > avg + slack) {
        std::ostringstream os;
        os.precision(12);
        os << "midpoint convexity violated: f(mid)=" << fm << " > " << avg;
        fail(k, t, os.str());
      }
    }
  }
  // Indicators may put every random sample outside C(t); properness of those
  // is established by the prox solver (projection) in build_problem instead.
  if (!any_finite && !f.get_if<ConstraintIndicator>()) {
    throw Error(ErrorCode::kAuditFailed, "no finite sample found: function may be improper");
  }
}

}  // namespace protodiff
