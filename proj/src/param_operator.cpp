#include "protodiff/param_operator.hpp"

#include <random>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {

ParamOperator::ParamOperator(int dim, Eval eval, double lipschitz, double strong_monotonicity,
                             JacX jac_x, JacT jac_t)
    : dim_(dim),
      eval_(std::move(eval)),
      lipschitz_(lipschitz),
      strong_monotonicity_(strong_monotonicity),
      jac_x_(std::move(jac_x)),
      jac_t_(std::move(jac_t)) {
  if (dim_ <= 0) throw Error(ErrorCode::kInvalidArgument, "operator dimension must be positive");
  if (!eval_) throw Error(ErrorCode::kInvalidArgument, "operator without evaluator");
}

ParamOperator ParamOperator::identity(int dim) {
  AffineForm form{[dim](double) { return Matrix(Matrix::Identity(dim, dim)); },
                  [dim](double) { return Vector(Vector::Zero(dim)); },
                  [dim](double) { return Matrix(Matrix::Zero(dim, dim)); },
                  [dim](double) { return Vector(Vector::Zero(dim)); }};
  return affine(std::move(form), 1.0, 1.0);
}

ParamOperator ParamOperator::affine(AffineForm form, double lipschitz,
                                    double strong_monotonicity) {
  const int dim = static_cast<int>(form.shift(0.0).size());
  auto eval = [m = form.matrix, s = form.shift](double t, const Vector& y) -> Vector {
    return m(t) * y + s(t);
  };
  auto jac_x = [m = form.matrix](double t, const Vector&) -> Matrix { return m(t); };
  auto jac_t = [md = form.matrix_dt, sd = form.shift_dt](double t, const Vector& y) -> Vector {
    return md(t) * y + sd(t);
  };
  ParamOperator op(dim, eval, lipschitz, strong_monotonicity, jac_x, jac_t);
  op.affine_ = std::move(form);
  return op;
}

Vector ParamOperator::operator()(double t, const Vector& y) const {
  if (y.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "operator argument dimension");
  return eval_(t, y);
}

Matrix ParamOperator::jac_x(double t, const Vector& y) const {
  if (!jac_x_) throw Error(ErrorCode::kInvalidArgument, "operator has no analytic jac_x");
  return jac_x_(t, y);
}

Vector ParamOperator::jac_t(double t, const Vector& y) const {
  if (!jac_t_) throw Error(ErrorCode::kInvalidArgument, "operator has no analytic jac_t");
  return jac_t_(t, y);
}

void audit_operator(const ParamOperator& op, double t_max, std::uint64_t seed, int samples) {
  const double alpha = op.strong_monotonicity();
  const double lip = op.lipschitz();
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kAuditFailed, "strong monotonicity coefficient must be > 0");
  }
  if (!(lip >= alpha)) {
    throw Error(ErrorCode::kAuditFailed, "Lipschitz constant must satisfy M >= alpha");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unif_t(0.0, t_max);
  const int n = op.dim();
  for (int k = 0; k < samples; ++k) {
    const double t = (k == 0) ? 0.0 : unif_t(rng);
    Vector y1(n), y2(n);
    for (int i = 0; i < n; ++i) y1(i) = normal(rng);
    for (int i = 0; i < n; ++i) y2(i) = normal(rng);
    const Vector dy = y2 - y1;
    const Vector da = op(t, y2) - op(t, y1);
    const double dist2 = dy.squaredNorm();
    const double slack = 1e-9 * (1.0 + dist2);
    const double mono = da.dot(dy);
    if (mono < alpha * dist2 - slack || da.norm() > lip * dy.norm() + slack) {
      std::ostringstream os;
      os.precision(10);
      os << "sample " << k << " at t=" << t << ": <A(y2)-A(y1), y2-y1>=" << mono
         << " vs alpha*|dy|^2=" << alpha * dist2 << ", |A(y2)-A(y1)|=" << da.norm()
         << " vs M*|dy|=" << lip * dy.norm();
      throw Error(ErrorCode::kAuditFailed, os.str());
    }
  }
}

}  // namespace protodiff
