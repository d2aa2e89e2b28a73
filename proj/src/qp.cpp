#include "protodiff/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const QpProblem& qp) {
  const int n = qp.dim();
  if (qp.hessian.rows() != n || qp.hessian.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "QP Hessian shape");
  }
  if (qp.eq.rows() != qp.eq_rhs.size() || (qp.eq.rows() > 0 && qp.eq.cols() != n)) {
    throw Error(ErrorCode::kDimensionMismatch, "QP equality rows shape");
  }
  if (qp.ineq.rows() != qp.ineq_rhs.size() || (qp.ineq.rows() > 0 && qp.ineq.cols() != n)) {
    throw Error(ErrorCode::kDimensionMismatch, "QP inequality rows shape");
  }
}

// Orthonormal basis of the null space of the rows of A (A may be rank deficient).
Matrix null_space(const Matrix& rows, int n) {
  if (rows.rows() == 0) return Matrix::Identity(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(rows.transpose());
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - rank);
}

}  // namespace

QpProblem QpProblem::unconstrained(Matrix hessian, Vector linear) {
  const auto n = linear.size();
  return QpProblem{std::move(hessian), std::move(linear), Matrix(0, n), Vector(0), Matrix(0, n),
                   Vector(0)};
}

double kkt_residual(const QpProblem& qp, const Vector& z, const Vector& eq_mult,
                    const Vector& ineq_mult) {
  Vector stat = qp.hessian * z + qp.linear;
  if (qp.eq.rows() > 0) stat += qp.eq.transpose() * eq_mult;
  if (qp.ineq.rows() > 0) stat += qp.ineq.transpose() * ineq_mult;
  double res = stat.lpNorm<Eigen::Infinity>();
  if (qp.eq.rows() > 0) res = std::max(res, (qp.eq * z - qp.eq_rhs).lpNorm<Eigen::Infinity>());
  for (int i = 0; i < qp.ineq.rows(); ++i) {
    const double slack = qp.ineq_rhs(i) - qp.ineq.row(i).dot(z);
    res = std::max(res, std::max(0.0, -slack));
    res = std::max(res, std::max(0.0, -ineq_mult(i)));
    res = std::max(res, std::abs(ineq_mult(i) * slack));
  }
  return res;
}

QpResult solve_qp_dual(const QpProblem& qp) {
  check_shapes(qp);
  const int n = qp.dim();
  const int n_eq = static_cast<int>(qp.eq.rows());
  const int n_in = static_cast<int>(qp.ineq.rows());

  Eigen::LLT<Matrix> llt(qp.hessian);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "dual active-set QP needs a positive definite Hessian");
  }
  const Matrix hinv = llt.solve(Matrix::Identity(n, n));

  // Constraint j in ">=" form: normal(j)' z >= bound(j). Equalities first.
  auto normal = [&](int j) -> Vector {
    return j < n_eq ? Vector(qp.eq.row(j).transpose()) : Vector(-qp.ineq.row(j - n_eq).transpose());
  };
  auto bound = [&](int j) { return j < n_eq ? qp.eq_rhs(j) : -qp.ineq_rhs(j - n_eq); };

  Vector z = -llt.solve(qp.linear);
  std::vector<int> active;  // constraint ids
  std::vector<double> mult;  // matching multipliers (dual, ">=" form)

  // z-direction and dual direction for adding normal np against the active set.
  auto directions = [&](const Vector& np, Vector& step, Vector& dual) {
    const Vector hn = hinv * np;
    if (active.empty()) {
      step = hn;
      dual.resize(0);
      return;
    }
    Matrix nmat(n, static_cast<int>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) nmat.col(static_cast<int>(k)) = normal(active[k]);
    const Matrix m = nmat.transpose() * hinv * nmat;
    dual = m.ldlt().solve(nmat.transpose() * hn);
    step = hn - hinv * nmat * dual;
  };

  auto drop = [&](std::size_t k) {
    active.erase(active.begin() + static_cast<long>(k));
    mult.erase(mult.begin() + static_cast<long>(k));
  };

  int iterations = 0;
  const int max_iter = 50 * (n + n_eq + n_in + 1);

  // Equalities: full steps, multipliers unrestricted; dependent consistent rows are skipped.
  for (int j = 0; j < n_eq; ++j) {
    const Vector np = normal(j);
    Vector step, dual;
    directions(np, step, dual);
    const double s = np.dot(z) - bound(j);
    const double scale = 1.0 + std::abs(bound(j)) + np.norm() * z.norm();
    if (step.norm() <= 1e-11 * (1.0 + (hinv * np).norm())) {
      if (std::abs(s) <= 1e-10 * scale) continue;
      throw Error(ErrorCode::kQpInfeasible, "equality constraints are inconsistent");
    }
    const double t = -s / step.dot(np);
    z += t * step;
    for (std::size_t k = 0; k < active.size(); ++k) mult[k] -= t * dual(static_cast<int>(k));
    active.push_back(j);
    mult.push_back(t);
  }

  while (true) {
    if (++iterations > max_iter) throw Error(ErrorCode::kNoConvergence, "dual QP iteration cap");
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < n_in; ++i) {
      const int j = n_eq + i;
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const Vector np = normal(j);
      const double s = np.dot(z) - bound(j);
      const double tol = 1e-12 * (1.0 + std::abs(bound(j)) + np.norm() * z.norm());
      if (s < -tol && s < worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) break;

    const Vector np = normal(p);
    double up = 0.0;
    while (true) {
      if (++iterations > max_iter) throw Error(ErrorCode::kNoConvergence, "dual QP iteration cap");
      Vector step, dual;
      directions(np, step, dual);
      double t1 = kInf;
      std::size_t block = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (active[k] < n_eq) continue;
        const double r = dual(static_cast<int>(k));
        if (r > 0.0 && mult[k] / r < t1) {
          t1 = mult[k] / r;
          block = k;
        }
      }
      const bool no_primal_step = step.norm() <= 1e-11 * (1.0 + (hinv * np).norm());
      if (no_primal_step) {
        if (t1 == kInf) {
          std::ostringstream os;
          os << "inequality row " << (p - n_eq) << " cannot be satisfied with the active set";
          throw Error(ErrorCode::kQpInfeasible, os.str());
        }
        for (std::size_t k = 0; k < active.size(); ++k) mult[k] -= t1 * dual(static_cast<int>(k));
        up += t1;
        drop(block);
        continue;
      }
      const double s = np.dot(z) - bound(p);
      const double t2 = -s / step.dot(np);
      const double t = std::min(t1, t2);
      z += t * step;
      for (std::size_t k = 0; k < active.size(); ++k) mult[k] -= t * dual(static_cast<int>(k));
      up += t;
      if (t2 <= t1) {
        active.push_back(p);
        mult.push_back(up);
        break;
      }
      drop(block);
    }
  }

  QpResult res;
  res.z = z;
  res.eq_multipliers = Vector::Zero(n_eq);
  res.ineq_multipliers = Vector::Zero(n_in);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int j = active[k];
    if (j < n_eq) {
      res.eq_multipliers(j) = -mult[k];
    } else {
      res.ineq_multipliers(j - n_eq) = mult[k];
      res.active.push_back(j - n_eq);
    }
  }
  res.iterations = iterations;
  res.kkt_residual = kkt_residual(qp, res.z, res.eq_multipliers, res.ineq_multipliers);
  return res;
}

QpResult solve_qp_primal(const QpProblem& qp, const Vector& feasible_start) {
  check_shapes(qp);
  const int n = qp.dim();
  const int n_eq = static_cast<int>(qp.eq.rows());
  const int n_in = static_cast<int>(qp.ineq.rows());
  if (feasible_start.size() != n) throw Error(ErrorCode::kDimensionMismatch, "QP start dimension");

  Vector z = feasible_start;
  const double feas_tol = 1e-9 * (1.0 + z.lpNorm<Eigen::Infinity>());
  if (n_eq > 0 && (qp.eq * z - qp.eq_rhs).lpNorm<Eigen::Infinity>() > feas_tol) {
    throw Error(ErrorCode::kInvalidArgument, "primal QP start violates equality rows");
  }
  std::vector<int> working;
  for (int i = 0; i < n_in; ++i) {
    const double slack = qp.ineq_rhs(i) - qp.ineq.row(i).dot(z);
    if (slack < -feas_tol) throw Error(ErrorCode::kInvalidArgument, "primal QP start violates inequality rows");
  }

  auto working_rows = [&]() {
    Matrix a(n_eq + static_cast<int>(working.size()), n);
    if (n_eq > 0) a.topRows(n_eq) = qp.eq;
    for (std::size_t k = 0; k < working.size(); ++k) a.row(n_eq + static_cast<int>(k)) = qp.ineq.row(working[k]);
    return a;
  };

  Vector eq_mult = Vector::Zero(n_eq);
  Vector ineq_mult = Vector::Zero(n_in);
  int iterations = 0;
  const int max_iter = 100 * (n + n_in + 1);
  while (true) {
    if (++iterations > max_iter) throw Error(ErrorCode::kNoConvergence, "primal QP iteration cap");
    const Matrix a = working_rows();
    const Vector grad = qp.hessian * z + qp.linear;
    const Matrix basis = null_space(a, n);

    Vector d = Vector::Zero(n);
    bool ray = false;
    if (basis.cols() > 0) {
      const Matrix reduced = basis.transpose() * qp.hessian * basis;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
      const Vector gz = basis.transpose() * grad;
      const Matrix& v = eig.eigenvectors();
      const Vector coeff = v.transpose() * gz;
      const double curv_tol = 1e-12 * (1.0 + qp.hessian.lpNorm<Eigen::Infinity>());
      const double grad_tol = 1e-13 * (1.0 + grad.norm());
      Vector dz = Vector::Zero(basis.cols());
      for (int k = 0; k < coeff.size(); ++k) {
        if (eig.eigenvalues()(k) <= curv_tol && std::abs(coeff(k)) > grad_tol) ray = true;
      }
      for (int k = 0; k < coeff.size(); ++k) {
        const bool flat = eig.eigenvalues()(k) <= curv_tol;
        if (ray && flat) {
          dz -= coeff(k) * v.col(k);
        } else if (!ray && !flat) {
          dz -= coeff(k) / eig.eigenvalues()(k) * v.col(k);
        }
      }
      d = basis * dz;
    }

    if (d.norm() <= 1e-13 * (1.0 + z.norm()) && !ray) {
      // Stationary on the working set: check multiplier signs.
      Vector lambda = Vector::Zero(a.rows());
      if (a.rows() > 0) lambda = a.transpose().completeOrthogonalDecomposition().solve(-grad);
      int worst = -1;
      double most_negative = -1e-12 * (1.0 + grad.norm());
      for (std::size_t k = 0; k < working.size(); ++k) {
        const double mu = lambda(n_eq + static_cast<int>(k));
        if (mu < most_negative) {
          most_negative = mu;
          worst = static_cast<int>(k);
        }
      }
      if (worst < 0) {
        eq_mult = lambda.head(n_eq);
        ineq_mult.setZero();
        for (std::size_t k = 0; k < working.size(); ++k) {
          ineq_mult(working[k]) = std::max(0.0, lambda(n_eq + static_cast<int>(k)));
        }
        break;
      }
      working.erase(working.begin() + worst);
      continue;
    }

    double alpha = ray ? kInf : 1.0;
    int blocking = -1;
    for (int i = 0; i < n_in; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double rate = qp.ineq.row(i).dot(d);
      if (rate <= 1e-14 * qp.ineq.row(i).norm() * d.norm()) continue;
      // Rows spanned by the working set cannot block a step inside its null space.
      if ((basis.transpose() * qp.ineq.row(i).transpose()).norm() <= 1e-10 * qp.ineq.row(i).norm()) continue;
      const double slack = std::max(0.0, qp.ineq_rhs(i) - qp.ineq.row(i).dot(z));
      const double step = slack / rate;
      if (step < alpha) {
        alpha = step;
        blocking = i;
      }
    }
    if (alpha == kInf) throw Error(ErrorCode::kQpUnbounded, "descent ray with zero curvature is unblocked");
    z += alpha * d;
    if (blocking >= 0) working.push_back(blocking);
  }

  QpResult res;
  res.z = z;
  res.eq_multipliers = eq_mult;
  res.ineq_multipliers = ineq_mult;
  res.active = working;
  std::sort(res.active.begin(), res.active.end());
  res.iterations = iterations;
  res.kkt_residual = kkt_residual(qp, z, eq_mult, ineq_mult);
  return res;
}

}  // namespace protodiff
