#include "protodiff/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "protodiff/error.hpp"
#include "protodiff/qp.hpp"

namespace protodiff {

PolyCone PolyCone::whole_space(int dim) { return PolyCone{dim, Matrix(0, dim), Matrix(0, dim)}; }

bool PolyCone::contains(const Vector& x, double tol) const {
  if (x.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "cone membership dimension");
  const double scale = tol * (1.0 + x.norm());
  if (eq.rows() > 0 && (eq * x).cwiseAbs().maxCoeff() > scale) return false;
  if (ineq.rows() > 0 && (ineq * x).maxCoeff() > scale) return false;
  return true;
}

Vector PolyCone::project(const Vector& x) const {
  QpProblem qp = QpProblem::unconstrained(Matrix::Identity(dim, dim), -x);
  qp.eq = eq;
  qp.eq_rhs = Vector::Zero(eq.rows());
  qp.ineq = ineq;
  qp.ineq_rhs = Vector::Zero(ineq.rows());
  return solve_qp_primal(qp, Vector::Zero(dim)).z;
}

std::vector<int> active_set(const ConstraintIndicator& c, const Vector& y) {
  const Vector F = c.value(0.0, y);
  std::vector<int> act;
  for (int i = 0; i < c.count; ++i) {
    if (F(i) > kActiveTol) {
      std::ostringstream os;
      os << "F_" << i << "(0, y) = " << F(i) << " > 0";
      throw Error(ErrorCode::kInfeasiblePoint, os.str());
    }
    if (F(i) >= -kActiveTol) act.push_back(i);
  }
  return act;
}

PolyCone cone_K(const ConstraintIndicator& c, const Vector& y, const Vector& v) {
  if (y.size() != c.dim || v.size() != c.dim) throw Error(ErrorCode::kDimensionMismatch, "cone_K arguments");
  const std::vector<int> act = active_set(c, y);
  const Matrix G = c.grad_x(0.0, y);
  PolyCone K;
  K.dim = c.dim;
  K.eq = v.transpose();
  K.ineq = Matrix(static_cast<Eigen::Index>(act.size()), c.dim);
  for (std::size_t j = 0; j < act.size(); ++j) K.ineq.row(static_cast<Eigen::Index>(j)) = G.row(act[j]);
  return K;
}

double surjectivity_bound(const Matrix& J) {
  const int k = static_cast<int>(J.rows());
  if (k == 0) return std::numeric_limits<double>::infinity();
  QpProblem qp = QpProblem::unconstrained(J * J.transpose(), Vector::Zero(k));
  qp.eq = Matrix::Ones(1, k);
  qp.eq_rhs = Vector::Ones(1);
  qp.ineq = -Matrix::Identity(k, k);
  qp.ineq_rhs = Vector::Zero(k);
  const QpResult r = solve_qp_primal(qp, Vector::Constant(k, 1.0 / k));
  return (J.transpose() * r.z).norm();
}

Polytope polytope_Y(const ConstraintIndicator& c, const Vector& y, const Vector& v) {
  if (y.size() != c.dim || v.size() != c.dim) throw Error(ErrorCode::kDimensionMismatch, "polytope_Y arguments");
  const std::vector<int> act = active_set(c, y);
  const int k = static_cast<int>(act.size());
  if (k > 10) throw Error(ErrorCode::kDimensionTooLarge, "vertex enumeration supports at most 10 active constraints");
  const Matrix G = c.grad_x(0.0, y);
  Matrix J(k, c.dim);
  for (int j = 0; j < k; ++j) J.row(j) = G.row(act[static_cast<std::size_t>(j)]);

  const double scale = 1.0 + v.norm() + (k ? J.norm() : 0.0);
  Polytope Y;
  for (int mask = 0; mask < (1 << k); ++mask) {
    std::vector<int> support;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) support.push_back(j);
    const int s = static_cast<int>(support.size());
    Vector w_s = Vector::Zero(s);
    if (s > 0) {
      Matrix cols(c.dim, s);
      for (int j = 0; j < s; ++j) cols.col(j) = J.row(support[static_cast<std::size_t>(j)]).transpose();
      Eigen::ColPivHouseholderQR<Matrix> qr(cols);
      qr.setThreshold(1e-12);
      if (qr.rank() < s) continue;  // not a basic solution
      w_s = qr.solve(v);
      if ((cols * w_s - v).norm() > 1e-9 * scale) continue;
      if (w_s.minCoeff() < -1e-12 * scale) continue;
    } else if (v.norm() > 1e-12 * scale) {
      continue;
    }
    Vector w = Vector::Zero(c.count);
    for (int j = 0; j < s; ++j) w(act[static_cast<std::size_t>(support[static_cast<std::size_t>(j)])]) = std::max(0.0, w_s(j));
    const bool seen = std::any_of(Y.vertices.begin(), Y.vertices.end(),
                                  [&](const Vector& u) { return (u - w).norm() <= 1e-10 * scale; });
    if (!seen) Y.vertices.push_back(w);
  }
  if (Y.vertices.empty()) {
    throw Error(ErrorCode::kEmptyY, "no multiplier w >= 0 on the active set with grad F' w = v");
  }
  if (surjectivity_bound(J) <= 1e-12 * scale) {
    throw Error(ErrorCode::kUnboundedY, "a nonzero w >= 0 with grad F' w = 0 exists: Y is unbounded");
  }
  return Y;
}

double support_Y(const Polytope& Y, const Vector& q) {
  if (Y.vertices.empty()) throw Error(ErrorCode::kEmptyY, "support function of an empty polytope");
  double best = -std::numeric_limits<double>::infinity();
  for (const Vector& w : Y.vertices) {
    if (w.size() != q.size()) throw Error(ErrorCode::kDimensionMismatch, "support_Y argument");
    best = std::max(best, w.dot(q));
  }
  return best;
}

}  // namespace protodiff
