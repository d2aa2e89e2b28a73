#include "protodiff/second_order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
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

constexpr double kDomainTol = 1e-10;
constexpr double kSubgradTol = 1e-9;

int variant_dim(const DerivedSecondOrder::Variant& v) {
  return std::visit(Overloaded{
                        [](const LinearOnCone& l) { return static_cast<int>(l.slope.size()); },
                        [](const PointIndicator& p) { return static_cast<int>(p.point.size()); },
                        [](const QuadraticPlusLinear& q) { return static_cast<int>(q.c.size()); },
                        [](const ConeQuadraticSupport& c) { return static_cast<int>(c.c.size()); },
                    },
                    v);
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void record(HypothesisLog* log, std::string clause, std::string name, CheckStatus status,
            std::string detail) {
  if (log) log->push_back({std::move(clause), std::move(name), status, std::move(detail)});
}

[[noreturn]] void violated(HypothesisLog* log, const std::string& clause, const std::string& name,
                           const std::string& detail) {
  record(log, clause, name, CheckStatus::kFail, detail);
  throw Error(ErrorCode::kHypothesisViolated, name + ": " + detail);
}

DerivedSecondOrder weighted_abs_case(const WeightedAbs1D& f, double x, double v, HypothesisLog* log) {
  const double a0 = f.a(0.0);
  const double b0 = f.b(0.0);
  const double scale = 1.0 + std::abs(a0);
  const bool at_kink = std::abs(x - b0) <= kSubgradTol * (1.0 + std::abs(b0));
  const double expected = x > b0 ? a0 : -a0;
  if (at_kink ? std::abs(v) > a0 + kSubgradTol * scale : std::abs(v - expected) > kSubgradTol * scale) {
    throw Error(ErrorCode::kSubgradientInvalid,
                "v=" + num(v) + " is not in the subdifferential of a(0)|. - b(0)| at x=" + num(x));
  }
  const double db = f.b.derivative_at_zero();
  if (std::abs(db) > 1e-9) {
    violated(log, "(iv)", "b'(0) = 0", "b'(0) = " + num(db));
  }
  record(log, "(iv)", "b'(0) = 0", f.b.d0() ? CheckStatus::kPass : CheckStatus::kSampledOnly,
         "b'(0) = " + num(db));
  const double da = f.a.derivative_at_zero();

  auto linear = [&](double slope, double ineq_sign, double offset) {
    LinearOnCone l;
    l.slope = Vector::Constant(1, slope);
    l.cone = PolyCone::whole_space(1);
    if (ineq_sign != 0.0) l.cone.ineq = Matrix::Constant(1, 1, ineq_sign);
    l.offset = offset;
    return DerivedSecondOrder(l);
  };
  if (!at_kink) return linear(x > b0 ? da : -da, 0.0, 0.0);

  if (!f.b.dd0()) {
    record(log, "(iv)", "b twice differentiable at 0", CheckStatus::kSampledOnly,
           "b''(0) estimated by forward differences");
  } else {
    record(log, "(iv)", "b twice differentiable at 0", CheckStatus::kPass, "analytic b''(0)");
  }
  const double ddb = f.b.second_derivative_at_zero();
  const double boundary_tol = kSubgradTol * scale;
  if (std::abs(v - a0) <= boundary_tol) {
    return linear(da, -1.0, -a0 * std::max(ddb, 0.0));
  }
  if (std::abs(v + a0) <= boundary_tol) {
    return linear(-da, 1.0, -a0 * std::max(-ddb, 0.0));
  }
  return DerivedSecondOrder(
      PointIndicator{Vector::Zero(1), 0.5 * (a0 - v) * ddb - a0 * std::max(ddb, 0.0)});
}

DerivedSecondOrder smooth_case(const SmoothFunction& s, const Vector& x, const Vector& v) {
  const Vector g = s.grad_x(0.0, x);
  if ((g - v).norm() > kSubgradTol * (1.0 + g.norm())) {
    throw Error(ErrorCode::kSubgradientInvalid, "v differs from grad_x f(0, x) by " + num((g - v).norm()));
  }
  return DerivedSecondOrder(QuadraticPlusLinear{s.hess_xx(0.0, x), s.hess_tx(0.0, x)});
}

DerivedSecondOrder indicator_case(const ConstraintIndicator& c, const Vector& y, const Vector& v,
                                  HypothesisLog* log, double t_max) {
  std::vector<int> act;
  try {
    act = active_set(c, y);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSubgradientInvalid, std::string("y is not in C(0): ") + e.what());
  }
  Polytope Y;
  try {
    Y = polytope_Y(c, y, v);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyY) {
      throw Error(ErrorCode::kSubgradientInvalid, std::string("v is not a normal vector: ") + e.what());
    }
    if (e.code() == ErrorCode::kUnboundedY) violated(log, "(iv)", "uniform surjectivity bound", e.what());
    throw;
  }

  const Vector gt = c.grad_t(0.0, y);
  if (gt.cwiseAbs().maxCoeff() > 1e-9) {
    violated(log, "(iv)", "grad_t F(0, y) = 0", "max |grad_t F_i(0, y)| = " + num(gt.cwiseAbs().maxCoeff()));
  }
  record(log, "(iv)", "grad_t F(0, y) = 0", CheckStatus::kPass, "");

  constexpr int kGrid = 32;
  double worst_violation = -std::numeric_limits<double>::infinity();
  double min_bound = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    const double t = t_max * k / kGrid;
    const Vector F = c.value(t, y);
    worst_violation = std::max(worst_violation, F.maxCoeff());
    if (F.maxCoeff() > kActiveTol) {
      violated(log, "(iv)", "y in C(t) for all t", "F(t, y) has a positive entry at t=" + num(t));
    }
    const Matrix G = c.grad_x(t, y);
    Matrix J(static_cast<Eigen::Index>(act.size()), c.dim);
    for (std::size_t j = 0; j < act.size(); ++j) J.row(static_cast<Eigen::Index>(j)) = G.row(act[j]);
    min_bound = std::min(min_bound, surjectivity_bound(J));
  }
  record(log, "(iv)", "y in C(t) for all t", CheckStatus::kSampledOnly,
         "checked on " + std::to_string(kGrid + 1) + " points of [0, " + num(t_max) +
             "], max F = " + num(worst_violation));
  if (!(min_bound > 1e-9)) {
    violated(log, "(iv)", "uniform surjectivity bound",
             "min over the simplex of |grad_x F(t, y)' w| = " + num(min_bound));
  }
  record(log, "(iv)", "uniform surjectivity bound", CheckStatus::kSampledOnly,
         act.empty() ? std::string("no active constraints")
                     : "alpha >= " + num(min_bound) + " on " + std::to_string(kGrid + 1) + " t-points");

  ConeQuadraticSupport out;
  out.Q = Matrix::Zero(c.dim, c.dim);
  out.c = Vector::Zero(c.dim);
  out.K = cone_K(c, y, v);
  out.Y = std::move(Y);
  out.curvature = c.second_order(y);
  return DerivedSecondOrder(std::move(out));
}

}  // namespace

Vector ConeQuadraticSupport::half_curvature(const Vector& w) const {
  const auto d = curvature.ftt.size();
  Vector q(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    q(i) = 0.5 * (curvature.ftt(i) + 2.0 * curvature.ftx.row(i).dot(w) +
                  w.dot(curvature.fxx[static_cast<std::size_t>(i)] * w));
  }
  return q;
}

DerivedSecondOrder::DerivedSecondOrder(Variant v) : variant_(std::move(v)), dim_(variant_dim(variant_)) {}

ExtReal DerivedSecondOrder::operator()(const Vector& w) const {
  if (w.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "second-order argument dimension");
  return std::visit(
      Overloaded{
          [&](const LinearOnCone& l) -> ExtReal {
            if (!l.cone.contains(w, kDomainTol)) return ExtReal::plus_inf();
            return l.slope.dot(w) + l.offset;
          },
          [&](const PointIndicator& p) -> ExtReal {
            if ((w - p.point).norm() > kDomainTol * (1.0 + p.point.norm())) return ExtReal::plus_inf();
            return p.offset;
          },
          [&](const QuadraticPlusLinear& q) -> ExtReal { return 0.5 * w.dot(q.Q * w) + q.c.dot(w); },
          [&](const ConeQuadraticSupport& c) -> ExtReal {
            if (!c.K.contains(w, kDomainTol)) return ExtReal::plus_inf();
            return 0.5 * w.dot(c.Q * w) + c.c.dot(w) + support_Y(c.Y, c.half_curvature(w));
          },
      },
      variant_);
}

Vector DerivedSecondOrder::project_to_domain(const Vector& w) const {
  return std::visit(Overloaded{
                        [&](const LinearOnCone& l) { return l.cone.project(w); },
                        [&](const PointIndicator& p) { return Vector(p.point); },
                        [&](const QuadraticPlusLinear&) { return Vector(w); },
                        [&](const ConeQuadraticSupport& c) { return c.K.project(w); },
                    },
                    variant_);
}

std::string_view DerivedSecondOrder::kind_name() const {
  return std::visit(Overloaded{
                        [](const LinearOnCone&) { return std::string_view("LINEAR_ON_CONE"); },
                        [](const PointIndicator&) { return std::string_view("POINT_INDICATOR"); },
                        [](const QuadraticPlusLinear&) { return std::string_view("QUADRATIC_PLUS_LINEAR"); },
                        [](const ConeQuadraticSupport&) { return std::string_view("CONE_QUADRATIC_SUPPORT"); },
                    },
                    variant_);
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "PASS";
    case CheckStatus::kFail: return "FAIL";
    case CheckStatus::kSampledOnly: return "SAMPLED-ONLY";
  }
  return "?";
}

DerivedSecondOrder d2e_closed_form(const ParamFunction& f, const Vector& x, const Vector& v,
                                   HypothesisLog* log, double t_max) {
  if (x.size() != f.dim() || v.size() != f.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "d2e_closed_form arguments");
  }
  return std::visit(
      Overloaded{
          [&](const SmoothFunction& s) { return smooth_case(s, x, v); },
          [&](const WeightedAbs1D& w) { return weighted_abs_case(w, x(0), v(0), log); },
          [&](const ConstraintIndicator& c) { return indicator_case(c, x, v, log, t_max); },
          [&](const CustomFunction&) -> DerivedSecondOrder {
            violated(log, "(iv)", "twice epi-differentiability",
                     "not certifiable for a custom function with an opaque prox oracle");
          },
      },
      f.variant());
}

}  // namespace protodiff
