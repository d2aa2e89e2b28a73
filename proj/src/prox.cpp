#include "protodiff/prox.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "protodiff/error.hpp"
#include "protodiff/qp.hpp"

namespace protodiff {
namespace {

constexpr int kProxProbes = 8;
constexpr int kViProbes = 16;
constexpr double kProbeTol = 1e-8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<Vector> probe_directions(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> dirs;
  for (int k = 0; k < count; ++k) {
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = normal(rng);
    dirs.push_back(d / std::max(d.norm(), 1e-300));
  }
  return dirs;
}

#ifndef NDEBUG
// Enumerates active sets; only used to double-check small projections.
Vector brute_force_projection(const Matrix& M, const Vector& q, const Vector& x) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(M.rows());
  Vector best = x;
  double best_dist = -1.0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) rows.push_back(i);
    const int k = static_cast<int>(rows.size());
    Vector z = x;
    if (k > 0) {
      Matrix a(k, n);
      Vector b(k);
      for (int j = 0; j < k; ++j) {
        a.row(j) = M.row(rows[j]);
        b(j) = q(rows[j]);
      }
      const Vector lam = (a * a.transpose()).completeOrthogonalDecomposition().solve(a * x - b);
      z = x - a.transpose() * lam;
      if ((a * z - b).norm() > 1e-9 * (1.0 + b.norm())) continue;
    }
    if (((M * z - q).array() > 1e-9).any()) continue;
    const double dist = (z - x).squaredNorm();
    if (best_dist < 0.0 || dist < best_dist) {
      best = z;
      best_dist = dist;
    }
  }
  return best;
}
#endif

Vector prox_smooth(const SmoothFunction& s, double t, const Vector& x, double rho) {
  const int n = static_cast<int>(x.size());
  auto objective = [&](const Vector& y) { return s.value(t, y) + (y - x).squaredNorm() / (2.0 * rho); };
  Vector y = x;
  for (int it = 0; it < 200; ++it) {
    const Vector g = s.grad_x(t, y) + (y - x) / rho;
    if (g.norm() <= 1e-13 * (1.0 + x.norm()) / rho) return y;
    const Matrix h = s.hess_xx(t, y) + Matrix::Identity(n, n) / rho;
    const Vector step = -h.ldlt().solve(g);
    if (!step.allFinite()) break;
    const double f0 = objective(y);
    double a = 1.0;
    while (a > 1e-12 && !(objective(y + a * step) <= f0 + 1e-4 * a * g.dot(step))) a *= 0.5;
    if (a <= 1e-12) {
      // Armijo cannot make progress at round-off level: accept if already stationary.
      if (g.norm() <= 1e-9 * (1.0 + x.norm()) / rho) return y;
      break;
    }
    y += a * step;
  }
  throw Error(ErrorCode::kSubproblemDiverged, "damped Newton did not converge on the smooth prox");
}

Vector project_indicator(const ConstraintIndicator& c, double t, const Vector& x) {
  if (c.affine_in_x) {
    const Vector zero = Vector::Zero(c.dim);
    return project_polyhedron(c.grad_x(t, zero), -c.value(t, zero), x);
  }
  return project_constraints(c, t, x);
}

// (x - y)/rho must be a subgradient of f(t,.) at y.
void check_prox(const ParamFunction& f, double t, const Vector& x, const Vector& y, double rho) {
  const ExtReal fy = f(t, y);
  const bool custom = f.get_if<CustomFunction>() != nullptr;
  const ErrorCode code = custom ? ErrorCode::kOracleInconsistent : ErrorCode::kPostconditionFailed;
  if (!fy.is_finite()) throw Error(code, "prox point outside dom f(t,.)");
  const Vector u = (x - y) / rho;
  const double scale = 1.0 + y.norm();
  for (const Vector& d : probe_directions(f.dim(), kProxProbes, 0x9e3779b97f4a7c15ULL)) {
    Vector z = y + scale * d;
    if (const auto* c = f.get_if<ConstraintIndicator>()) z = project_indicator(*c, t, z);
    const ExtReal fz = f(t, z);
    if (!fz.is_finite()) continue;
    const double gap = fz.value() - fy.value() - u.dot(z - y);
    const double tol = kProbeTol * (1.0 + std::abs(fz.value()) + std::abs(fy.value()) +
                                    u.norm() * (z - y).norm());
    if (gap < -tol) {
      std::ostringstream os;
      os.precision(12);
      os << "subgradient inequality violated by " << -gap << " at probe z=" << z.transpose();
      throw Error(code, os.str());
    }
  }
}

}  // namespace

double effective_rho(const ParamOperator& A, const SolverParams& sp) {
  const double alpha = A.strong_monotonicity();
  const double m = A.lipschitz();
  const double rho = sp.rho.value_or(alpha / (m * m));
  if (!(rho > 0.0) || !(rho < 2.0 * alpha / (m * m))) {
    std::ostringstream os;
    os << "rho=" << rho << " outside the contraction interval (0, " << 2.0 * alpha / (m * m) << ")";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
  if (!(sp.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be > 0");
  if (sp.max_iter <= 0) throw Error(ErrorCode::kInvalidArgument, "max_iter must be > 0");
  return rho;
}

Vector project_polyhedron(const Matrix& M, const Vector& q, const Vector& x) {
  const int n = static_cast<int>(x.size());
  if (M.cols() != n || M.rows() != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "polyhedron rows do not match the point");
  }
  QpProblem qp = QpProblem::unconstrained(Matrix::Identity(n, n), -x);
  qp.ineq = M;
  qp.ineq_rhs = q;
  QpResult r;
  try {
    r = solve_qp_dual(qp);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kQpInfeasible) throw Error(ErrorCode::kInfeasibleSet, e.what());
    throw;
  }
  const double scale = 1.0 + x.lpNorm<Eigen::Infinity>() + (q.size() ? q.lpNorm<Eigen::Infinity>() : 0.0);
  if (r.kkt_residual > 1e-10 * scale) {
    std::ostringstream os;
    os << "projection KKT residual " << r.kkt_residual;
    throw Error(ErrorCode::kPostconditionFailed, os.str());
  }
#ifndef NDEBUG
  if (n <= 3 && M.rows() <= 12) {
    const Vector check = brute_force_projection(M, q, x);
    if ((check - r.z).norm() > 1e-8 * scale) {
      throw Error(ErrorCode::kPostconditionFailed, "projection disagrees with active-set enumeration");
    }
  }
#endif
  return r.z;
}

Vector project_constraints(const ConstraintIndicator& c, double t, const Vector& x, double tol) {
  const int n = c.dim;
  const int m = c.count;
  if (x.size() != n) throw Error(ErrorCode::kDimensionMismatch, "projection point dimension");
  Vector z = x;
  Vector lam = Vector::Zero(m);
  const double scale = 1.0 + x.norm();
  const double trust = 10.0 * scale;
  auto merit = [&](const Vector& p, double nu) {
    return 0.5 * (p - x).squaredNorm() + nu * c.value(t, p).cwiseMax(0.0).sum();
  };
  for (int it = 0; it < 500; ++it) {
    const Vector F = c.value(t, z);
    const Matrix G = c.grad_x(t, z);
    const double stat = (z - x + G.transpose() * lam).lpNorm<Eigen::Infinity>();
    double comp = 0.0;
    for (int i = 0; i < m; ++i) comp = std::max(comp, std::abs(lam(i) * F(i)));
    const double res = std::max({stat, std::max(F.maxCoeff(), 0.0), comp});
    if (res <= tol * scale && F.maxCoeff() <= kFeasibilityTol) return z;

    Matrix H = Matrix::Identity(n, n);
    const std::vector<Matrix> hess = c.hess_xx(t, z);
    for (int i = 0; i < m; ++i) H += lam(i) * hess[static_cast<std::size_t>(i)];
    QpProblem qp = QpProblem::unconstrained(H, z - x);
    qp.ineq = G;
    qp.ineq_rhs = -F;
    QpResult sub;
    try {
      sub = solve_qp_dual(qp);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kQpInfeasible) {
        throw Error(ErrorCode::kInfeasibleSet, "linearized constraints infeasible: C(t) is empty");
      }
      throw;
    }
    Vector d = sub.z;
    if (d.norm() > trust) d *= trust / d.norm();
    const double nu = std::max(1.0, 2.0 * sub.ineq_multipliers.maxCoeff());
    const double m0 = merit(z, nu);
    double a = 1.0;
    while (a > 1e-10 && merit(z + a * d, nu) >= m0 && a * d.norm() > 1e-6 * scale) a *= 0.5;
    z += a * d;
    lam = sub.ineq_multipliers;
  }
  throw Error(ErrorCode::kSubproblemDiverged, "SQP projection did not reach the KKT tolerance");
}

Vector moreau_prox(const ParamFunction& f, double t, const Vector& x, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorCode::kInvalidArgument, "prox step rho must be > 0");
  if (x.size() != f.dim()) throw Error(ErrorCode::kDimensionMismatch, "prox argument dimension");
  const Vector y = std::visit(
      Overloaded{
          [&](const SmoothFunction& s) { return prox_smooth(s, t, x, rho); },
          [&](const WeightedAbs1D& w) {
            const double b = w.b(t);
            const double thr = rho * w.a(t);
            const double r = x(0) - b;
            Vector out(1);
            out(0) = b + (r > thr ? r - thr : (r < -thr ? r + thr : 0.0));
            return out;
          },
          [&](const ConstraintIndicator& c) { return project_indicator(c, t, x); },
          [&](const CustomFunction& c) {
            if (!c.prox) throw Error(ErrorCode::kMissingProxOracle, "custom function has no prox oracle");
            Vector out = c.prox(t, x, rho);
            if (out.size() != x.size()) {
              throw Error(ErrorCode::kOracleInconsistent, "prox oracle returned wrong dimension");
            }
            return out;
          },
      },
      f.variant());
  check_prox(f, t, x, y, rho);
  return y;
}

ViSolution solve_vi_detailed(const VIProblem& p, double t, const SolverParams& sp) {
  const double rho = effective_rho(p.A, sp);
  const Vector xt = p.x(t);
  const int n = p.dim();
  ViSolution sol;
  sol.rho = rho;

  auto fixed_point_map = [&](const Vector& y) {
    return moreau_prox(p.f, t, y - rho * (p.A(t, y) - xt), rho);
  };

  const auto* wabs = p.f.get_if<WeightedAbs1D>();
  if (sp.closed_form && wabs && n == 1 && p.A.affine_form()) {
    const double c = p.A.affine_form()->matrix(t)(0, 0);
    const double d = xt(0) - p.A.affine_form()->shift(t)(0);
    const double a = wabs->a(t);
    const double b = wabs->b(t);
    sol.y = Vector(1);
    if (c * b < d - a) {
      sol.y(0) = (d - a) / c;
    } else if (c * b > d + a) {
      sol.y(0) = (d + a) / c;
    } else {
      sol.y(0) = b;
    }
    sol.closed_form = true;
  } else {
    Vector y = sp.initial_guess.value_or(Vector::Zero(n));
    if (y.size() != n) throw Error(ErrorCode::kDimensionMismatch, "initial guess dimension");
    bool converged = false;
    for (int it = 0; it < sp.max_iter; ++it) {
      const Vector next = fixed_point_map(y);
      const double step = (next - y).norm();
      sol.step_norms.push_back(step);
      y = next;
      sol.iterations = it + 1;
      if (step <= sp.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "fixed-point iteration did not reach tol=" << sp.tol << " in " << sp.max_iter
         << " iterations (last step " << sol.step_norms.back() << ")";
      throw Error(ErrorCode::kMaxIterExceeded, os.str());
    }
    sol.y = y;
  }

  sol.fixed_point_residual = (sol.y - fixed_point_map(sol.y)).norm();
  if (sol.fixed_point_residual > sp.tol) {
    std::ostringstream os;
    os << "fixed-point residual " << sol.fixed_point_residual << " exceeds tol " << sp.tol;
    throw Error(sol.closed_form ? ErrorCode::kPostconditionFailed : ErrorCode::kMaxIterExceeded,
                os.str());
  }

  const ExtReal fy = p.f(t, sol.y);
  if (!fy.is_finite()) throw Error(ErrorCode::kPostconditionFailed, "solution outside dom f(t,.)");
  const Vector r = p.A(t, sol.y) - xt;
  const double scale = 1.0 + sol.y.norm();
  for (const Vector& d : probe_directions(n, kViProbes, sp.seed)) {
    Vector z = sol.y + scale * d;
    if (const auto* c = p.f.get_if<ConstraintIndicator>()) z = project_indicator(*c, t, z);
    const ExtReal fz = p.f(t, z);
    if (!fz.is_finite()) continue;
    const double lhs = r.dot(z - sol.y) + fz.value() - fy.value();
    const double tol = kProbeTol * (1.0 + r.norm() * (z - sol.y).norm() + std::abs(fz.value()) +
                                    std::abs(fy.value()));
    if (lhs < -tol) {
      std::ostringstream os;
      os.precision(12);
      os << "variational inequality violated by " << -lhs << " at probe z=" << z.transpose();
      throw Error(ErrorCode::kPostconditionFailed, os.str());
    }
  }
  return sol;
}

Vector solve_vi_at_t(const VIProblem& p, double t, const SolverParams& sp) {
  return solve_vi_detailed(p, t, sp).y;
}

}  // namespace protodiff
