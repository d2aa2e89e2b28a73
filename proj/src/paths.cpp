#include "protodiff/paths.hpp"

#include <cmath>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

constexpr double kSpotCheckTol = 1e-6;
constexpr double kDomainSlack = 1e-12;

void check_domain(double t, double t_max) {
  if (!(t >= -kDomainSlack && t <= t_max + kDomainSlack)) {
    std::ostringstream os;
    os << "parameter t=" << t << " outside [0, " << t_max << "]";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
}

void spot_check(const char* what, double analytic, double numeric) {
  if (std::abs(analytic - numeric) > kSpotCheckTol * (1.0 + std::abs(analytic))) {
    std::ostringstream os;
    os.precision(12);
    os << what << ": analytic " << analytic << " vs finite difference " << numeric;
    throw Error(ErrorCode::kPathCheckFailed, os.str());
  }
}

}  // namespace

double forward_first_derivative(const std::function<double(double)>& f, double h) {
  const double f0 = f(0.0);
  auto stencil = [&](double s) { return (-3.0 * f0 + 4.0 * f(s) - f(2.0 * s)) / (2.0 * s); };
  return (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
}

double forward_second_derivative(const std::function<double(double)>& f, double h) {
  const double f0 = f(0.0);
  auto stencil = [&](double s) {
    return (2.0 * f0 - 5.0 * f(s) + 4.0 * f(2.0 * s) - f(3.0 * s)) / (s * s);
  };
  return (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
}

ScalarPath::ScalarPath(Fn eval, std::optional<double> d0, std::optional<double> dd0,
                       double t_max)
    : eval_(std::move(eval)), d0_(d0), dd0_(dd0), t_max_(t_max) {
  if (!eval_) throw Error(ErrorCode::kInvalidArgument, "ScalarPath without evaluator");
  if (!(t_max_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ScalarPath t_max must be > 0");
  if (d0_) spot_check("ScalarPath d0", *d0_, forward_first_derivative(eval_));
  if (dd0_) spot_check("ScalarPath dd0", *dd0_, forward_second_derivative(eval_));
}

ScalarPath ScalarPath::constant(double c, double t_max) {
  return ScalarPath([c](double) { return c; }, 0.0, 0.0, t_max);
}

double ScalarPath::operator()(double t) const {
  check_domain(t, t_max_);
  return eval_(std::max(t, 0.0));
}

double ScalarPath::derivative_at_zero() const {
  return d0_ ? *d0_ : forward_first_derivative(eval_);
}

double ScalarPath::second_derivative_at_zero() const {
  return dd0_ ? *dd0_ : forward_second_derivative(eval_);
}

VectorPath::VectorPath(int dim, Fn eval, std::optional<Vector> d0, double t_max)
    : dim_(dim), eval_(std::move(eval)), d0_(std::move(d0)), t_max_(t_max) {
  if (dim_ <= 0) throw Error(ErrorCode::kInvalidArgument, "VectorPath dimension must be positive");
  if (!eval_) throw Error(ErrorCode::kInvalidArgument, "VectorPath without evaluator");
  if (!(t_max_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "VectorPath t_max must be > 0");
  if (eval_(0.0).size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "VectorPath evaluator returns wrong dimension");
  }
  if (d0_) {
    if (d0_->size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "VectorPath d0 has wrong dimension");
    }
    for (int i = 0; i < dim_; ++i) {
      auto component = [this, i](double t) { return eval_(t)(i); };
      spot_check("VectorPath d0 component", (*d0_)(i), forward_first_derivative(component));
    }
  }
}

VectorPath VectorPath::constant(const Vector& c, double t_max) {
  return VectorPath(static_cast<int>(c.size()), [c](double) { return c; },
                    Vector::Zero(c.size()), t_max);
}

Vector VectorPath::operator()(double t) const {
  check_domain(t, t_max_);
  return eval_(std::max(t, 0.0));
}

Vector VectorPath::derivative_at_zero() const {
  if (d0_) return *d0_;
  Vector d(dim_);
  for (int i = 0; i < dim_; ++i) {
    d(i) = forward_first_derivative([this, i](double t) { return eval_(t)(i); });
  }
  return d;
}

}  // namespace protodiff
