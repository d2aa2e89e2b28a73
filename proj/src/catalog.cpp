#include "protodiff/catalog.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

double falling(int k, int d) {
  double f = 1.0;
  for (int j = 0; j < d; ++j) f *= static_cast<double>(k - j);
  return f;
}

template <class T>
T poly_generic(const std::vector<T>& c, double t, int derivative, T zero) {
  T out = zero;
  for (int k = static_cast<int>(c.size()) - 1; k >= derivative; --k) {
    out = out * t + falling(k, derivative) * c[static_cast<std::size_t>(k)];
  }
  return out;
}

template <class T>
bool is_constant(const std::vector<T>& c) {
  for (std::size_t k = 1; k < c.size(); ++k)
    if (c[k].cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

}  // namespace

double poly_eval(const ScalarPoly& c, double t, int derivative) {
  return poly_generic<double>(c, t, derivative, 0.0);
}

Vector poly_eval(const VectorPoly& c, double t, int derivative) {
  if (c.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vector polynomial");
  return poly_generic<Vector>(c, t, derivative, Vector::Zero(c.front().size()));
}

Matrix poly_eval(const MatrixPoly& c, double t, int derivative) {
  if (c.empty()) throw Error(ErrorCode::kInvalidArgument, "empty matrix polynomial");
  return poly_generic<Matrix>(c, t, derivative,
                              Matrix::Zero(c.front().rows(), c.front().cols()));
}

ScalarPath poly_path(ScalarPoly coeffs, double t_max) {
  const double d0 = poly_eval(coeffs, 0.0, 1);
  const double dd0 = poly_eval(coeffs, 0.0, 2);
  return ScalarPath([c = std::move(coeffs)](double t) { return poly_eval(c, t); }, d0, dd0, t_max);
}

VectorPath poly_path(VectorPoly coeffs, double t_max) {
  if (coeffs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vector polynomial");
  const int dim = static_cast<int>(coeffs.front().size());
  for (const Vector& v : coeffs)
    if (v.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "vector polynomial coefficients");
  Vector d0 = poly_eval(coeffs, 0.0, 1);
  return VectorPath(dim, [c = std::move(coeffs)](double t) { return poly_eval(c, t); }, d0, t_max);
}

ParamOperator affine_operator(const MatrixPoly& matrix, const VectorPoly& shift, double t_max,
                              std::optional<double> lipschitz,
                              std::optional<double> strong_monotonicity) {
  if (matrix.empty() || shift.empty()) throw Error(ErrorCode::kInvalidArgument, "empty affine operator");
  const auto n = matrix.front().rows();
  for (const Matrix& m : matrix)
    if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "operator matrix shape");
  for (const Vector& s : shift)
    if (s.size() != n) throw Error(ErrorCode::kDimensionMismatch, "operator shift shape");

  if (!lipschitz || !strong_monotonicity) {
    const bool constant = is_constant(matrix);
    const int grid = constant ? 0 : 256;
    double lip = 0.0;
    double alpha = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= grid; ++k) {
      const Matrix m = poly_eval(matrix, grid == 0 ? 0.0 : t_max * k / grid);
      const Matrix sym = 0.5 * (m + m.transpose());
      alpha = std::min(alpha, Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().minCoeff());
      lip = std::max(lip, Eigen::JacobiSVD<Matrix>(m).singularValues()(0));
    }
    if (!constant) {
      // The extremes between grid points are not sampled.
      alpha *= 1.0 - 1e-6;
      lip *= 1.0 + 1e-6;
    }
    if (!lipschitz) lipschitz = lip;
    if (!strong_monotonicity) strong_monotonicity = alpha;
  }
  AffineForm form{
      [matrix](double t) { return poly_eval(matrix, t); },
      [shift](double t) { return poly_eval(shift, t); },
      [matrix](double t) { return poly_eval(matrix, t, 1); },
      [shift](double t) { return poly_eval(shift, t, 1); },
  };
  return ParamOperator::affine(std::move(form), *lipschitz, *strong_monotonicity);
}

ParamFunction smooth_quadratic(const MatrixPoly& P, const VectorPoly& q, const ScalarPoly& r) {
  if (P.empty() || q.empty()) throw Error(ErrorCode::kInvalidArgument, "empty quadratic data");
  const int n = static_cast<int>(q.front().size());
  for (const Matrix& m : P)
    if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "quadratic P shape");
  SmoothFunction s;
  s.dim = n;
  s.value = [P, q, r](double t, const Vector& x) {
    return 0.5 * x.dot(poly_eval(P, t) * x) + poly_eval(q, t).dot(x) + poly_eval(r, t);
  };
  s.grad_x = [P, q](double t, const Vector& x) -> Vector { return poly_eval(P, t) * x + poly_eval(q, t); };
  s.hess_xx = [P](double t, const Vector&) -> Matrix { return poly_eval(P, t); };
  s.hess_tx = [P, q](double t, const Vector& x) -> Vector {
    return poly_eval(P, t, 1) * x + poly_eval(q, t, 1);
  };
  return ParamFunction(std::move(s));
}

ParamFunction quadratic_constraints(const std::vector<QuadraticConstraint>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "constraint indicator without rows");
  const int n = static_cast<int>(rows.front().P.rows());
  const int m = static_cast<int>(rows.size());
  bool affine = true;
  for (const auto& row : rows) {
    if (row.P.rows() != n || row.P.cols() != n || row.r.empty() || row.r.front().size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "constraint row shape");
    }
    affine = affine && row.P.cwiseAbs().maxCoeff() == 0.0;
  }
  ConstraintIndicator c;
  c.dim = n;
  c.count = m;
  c.affine_in_x = affine;
  c.value = [rows, m](double t, const Vector& x) {
    Vector F(m);
    for (int i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      F(i) = 0.5 * x.dot(row.P * x) + poly_eval(row.r, t).dot(x) + poly_eval(row.s, t);
    }
    return F;
  };
  c.grad_x = [rows, m, n](double t, const Vector& x) {
    Matrix G(m, n);
    for (int i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      G.row(i) = (row.P * x + poly_eval(row.r, t)).transpose();
    }
    return G;
  };
  c.grad_t = [rows, m](double t, const Vector& x) {
    Vector g(m);
    for (int i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      g(i) = poly_eval(row.r, t, 1).dot(x) + poly_eval(row.s, t, 1);
    }
    return g;
  };
  c.hess_xx = [rows](double, const Vector&) {
    std::vector<Matrix> h;
    for (const auto& row : rows) h.push_back(row.P);
    return h;
  };
  c.second_order = [rows, m, n](const Vector& x) {
    ConstraintSecondOrder so;
    so.ftt = Vector(m);
    so.ftx = Matrix(m, n);
    for (int i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      so.ftt(i) = poly_eval(row.r, 0.0, 2).dot(x) + poly_eval(row.s, 0.0, 2);
      so.ftx.row(i) = poly_eval(row.r, 0.0, 1).transpose();
      so.fxx.push_back(row.P);
    }
    return so;
  };
  return ParamFunction(std::move(c));
}

}  // namespace protodiff
