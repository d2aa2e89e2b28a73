#include "protodiff/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "protodiff/epi.hpp"
#include "protodiff/error.hpp"
#include "protodiff/qp.hpp"

namespace protodiff {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kRichardsonLevels = 7;
constexpr double kRichardsonTol = 1e-6;
constexpr int kResidualProbes = 16;
constexpr double kResidualTol = 1e-8;

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

std::string vec_str(const Vector& v) {
  std::ostringstream os;
  os.precision(12);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ')';
  return os.str();
}

// c + <g, x> + 1/2 x'Hx
struct Piece {
  double c = 0.0;
  Vector g;
  Matrix H;

  double value(const Vector& x) const { return c + g.dot(x) + 0.5 * x.dot(H * x); }
};

std::vector<Piece> pieces_from(const Polytope& Y, const ConstraintSecondOrder& curv, int n) {
  std::vector<Piece> out;
  for (const Vector& w : Y.vertices) {
    Piece p;
    p.c = 0.5 * w.dot(curv.ftt);
    p.g = curv.ftx.transpose() * w;
    p.H = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < w.size(); ++i) p.H += w(i) * curv.fxx[static_cast<std::size_t>(i)];
    out.push_back(std::move(p));
  }
  return out;
}

Piece zero_piece(int n) { return Piece{0.0, Vector::Zero(n), Matrix::Zero(n, n)}; }

DerivativeQpResult minimize_pieces(const PolyCone& K, const std::vector<Piece>& pieces, const Matrix& Q,
                                   const Vector& lin) {
  const int n = static_cast<int>(lin.size());
  const int np = static_cast<int>(pieces.size());
  if (np == 0) throw Error(ErrorCode::kEmptyY, "no support pieces");
  auto objective = [&](const Vector& x) {
    double m = -std::numeric_limits<double>::infinity();
    for (const Piece& p : pieces) m = std::max(m, p.value(x));
    return 0.5 * x.dot(Q * x) + lin.dot(x) + m;
  };

  Vector x = Vector::Zero(n);
  Vector mu = Vector::Zero(np);
  {
    double m = -std::numeric_limits<double>::infinity();
    for (const Piece& p : pieces) m = std::max(m, p.c);
    int ties = 0;
    for (int k = 0; k < np; ++k) ties += pieces[static_cast<std::size_t>(k)].c >= m - 1e-14 ? 1 : 0;
    for (int k = 0; k < np; ++k) mu(k) = pieces[static_cast<std::size_t>(k)].c >= m - 1e-14 ? 1.0 / ties : 0.0;
  }

  const int n_in = static_cast<int>(K.ineq.rows());
  const int n_eq = static_cast<int>(K.eq.rows());
  DerivativeQpResult out;
  for (int outer = 0; outer < 100; ++outer) {
    Matrix hbar = Matrix::Zero(n, n);
    for (int k = 0; k < np; ++k) hbar += mu(k) * pieces[static_cast<std::size_t>(k)].H;

    QpProblem qp;
    qp.hessian = Matrix::Zero(n + 1, n + 1);
    qp.hessian.topLeftCorner(n, n) = Q + hbar;
    qp.linear = Vector(n + 1);
    qp.linear.head(n) = Q * x + lin;
    qp.linear(n) = 1.0;
    qp.eq = Matrix::Zero(n_eq, n + 1);
    qp.eq.leftCols(n) = K.eq;
    qp.eq_rhs = n_eq ? Vector(-K.eq * x) : Vector(0);
    qp.ineq = Matrix::Zero(np + n_in, n + 1);
    qp.ineq_rhs = Vector(np + n_in);
    double sigma0 = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < np; ++k) {
      const Piece& p = pieces[static_cast<std::size_t>(k)];
      qp.ineq.row(k).head(n) = (p.g + p.H * x).transpose();
      qp.ineq(k, n) = -1.0;
      qp.ineq_rhs(k) = -p.value(x);
      sigma0 = std::max(sigma0, p.value(x));
    }
    if (n_in) {
      qp.ineq.bottomLeftCorner(n_in, n) = K.ineq;
      qp.ineq_rhs.tail(n_in) = -K.ineq * x;
    }
    Vector start = Vector::Zero(n + 1);
    start(n) = sigma0;
    const QpResult r = solve_qp_primal(qp, start);
    const Vector d = r.z.head(n);
    mu = r.ineq_multipliers.head(np);
    out.outer_iterations = outer + 1;
    out.kkt_residual = r.kkt_residual;

    const double f0 = objective(x);
    double a = 1.0;
    while (a > 1e-8 && objective(x + a * d) > f0 + 1e-14 * (1.0 + std::abs(f0))) a *= 0.5;
    x += a * d;
    if (d.norm() <= 1e-12 * (1.0 + x.norm())) {
      out.x = x;
      const double scale = 1.0 + lin.lpNorm<Eigen::Infinity>() + Q.lpNorm<Eigen::Infinity>();
      if (out.kkt_residual > kResidualTol * scale) {
        throw Error(ErrorCode::kNoConvergence, "derivative QP KKT residual " + num(out.kkt_residual));
      }
      return out;
    }
  }
  throw Error(ErrorCode::kNoConvergence, "derivative QP outer loop did not settle");
}

bool is_symmetric(const Matrix& m) {
  return (m - m.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + m.lpNorm<Eigen::Infinity>());
}

Vector richardson(const std::function<Vector(double)>& q, double h, double* tail) {
  std::vector<std::vector<Vector>> T(kRichardsonLevels);
  for (int k = 0; k < kRichardsonLevels; ++k) {
    T[static_cast<std::size_t>(k)].push_back(q(h * std::ldexp(1.0, -k)));
    for (int j = 1; j <= k; ++j) {
      const Vector& a = T[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)];
      const Vector& b = T[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)];
      T[static_cast<std::size_t>(k)].push_back(a + (a - b) / (std::ldexp(1.0, j) - 1.0));
    }
  }
  const Vector& best = T.back().back();
  *tail = (best - T[kRichardsonLevels - 2].back()).norm();
  return best;
}

void add(HypothesisLog& log, std::string clause, std::string name, CheckStatus st, std::string detail) {
  log.push_back({std::move(clause), std::move(name), st, std::move(detail)});
}

}  // namespace

SemiDerivative semi_derivative(const ParamOperator& A, const Vector& y0, double h, std::uint64_t seed) {
  const int n = A.dim();
  if (y0.size() != n) throw Error(ErrorCode::kDimensionMismatch, "semi-derivative base point");
  SemiDerivative S;
  S.y0 = y0;
  S.lipschitz = A.lipschitz();
  S.strong_monotonicity = A.strong_monotonicity();
  if (A.has_jacobians()) {
    S.J = A.jac_x(0.0, y0);
    S.s = A.jac_t(0.0, y0);
    S.eval = [J = *S.J, s = *S.s](const Vector& w) -> Vector { return J * w + s; };
  } else {
    const Vector a0 = A(0.0, y0);
    auto eval = [A, y0, a0, h](const Vector& w, double* tail) {
      return richardson([&](double tau) -> Vector { return (A(tau, y0 + tau * w) - a0) / tau; }, h, tail);
    };
    // Settle the limit on unit directions before trusting the contract.
    double worst = 0.0;
    for (int i = -1; i < n; ++i) {
      const Vector w = i < 0 ? Vector(Vector::Zero(n)) : Vector(Vector::Unit(n, i));
      double tail = 0.0;
      const Vector val = eval(w, &tail);
      worst = std::max(worst, tail / (1.0 + val.norm()));
    }
    S.richardson_tail = worst;
    if (worst > kRichardsonTol) {
      throw Error(ErrorCode::kNotSemidifferentiable,
                  "Richardson tail " + num(worst) + " exceeds " + num(kRichardsonTol));
    }
    S.eval = [eval](const Vector& w) {
      double tail = 0.0;
      return eval(w, &tail);
    };
  }
  const ParamOperator as_op(
      n, [eval = S.eval](double, const Vector& w) { return eval(w); }, S.lipschitz, S.strong_monotonicity);
  audit_operator(as_op, 1.0, seed);
  return S;
}

DerivativeQpResult constrained_derivative_qp(const PolyCone& K, const Polytope& Y, const Matrix& Q,
                                             const Vector& linear, const ConstraintSecondOrder& curvature) {
  const int n = static_cast<int>(linear.size());
  if (K.dim != n || Q.rows() != n || Q.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "derivative QP data");
  }
  if (Y.vertices.empty()) throw Error(ErrorCode::kEmptyY, "derivative QP with empty Y");
  try {
    return minimize_pieces(K, pieces_from(Y, curvature, n), Q, linear);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kQpUnbounded || e.code() == ErrorCode::kQpInfeasible) throw;
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kQpInfeasible, e.what());
    throw;
  }
}

Vector minimize_second_order_model(const DerivedSecondOrder& D, const Matrix& Q, const Vector& linear) {
  const int n = D.dim();
  return std::visit(Overloaded{
                        [&](const PointIndicator& p) { return Vector(p.point); },
                        [&](const QuadraticPlusLinear& q) {
                          return Vector((Q + q.Q).ldlt().solve(-(linear + q.c)));
                        },
                        [&](const LinearOnCone& l) {
                          return minimize_pieces(l.cone, {zero_piece(n)}, Q, linear + l.slope).x;
                        },
                        [&](const ConeQuadraticSupport& c) {
                          return constrained_derivative_qp(c.K, c.Y, Q + c.Q, linear + c.c, c.curvature).x;
                        },
                    },
                    D.variant());
}

Vector solve_derivative_vi(const DerivedSecondOrder& D, const SemiDerivative& S, const Vector& x_prime,
                           const SolverParams& sp) {
  const int n = D.dim();
  if (const auto* p = D.get_if<PointIndicator>()) return p->point;
  if (S.analytic()) {
    if (const auto* q = D.get_if<QuadraticPlusLinear>()) {
      return (*S.J + q->Q).partialPivLu().solve(x_prime - *S.s - q->c);
    }
    if (is_symmetric(*S.J)) return minimize_second_order_model(D, *S.J, *S.s - x_prime);
  }
  // Forward-backward iteration with the prox of D.
  const double rho = S.strong_monotonicity / (S.lipschitz * S.lipschitz);
  const Matrix scaled_id = Matrix::Identity(n, n) / rho;
  Vector y = Vector::Zero(n);
  for (int it = 0; it < sp.max_iter; ++it) {
    const Vector z = y - rho * (S(y) - x_prime);
    const Vector next = minimize_second_order_model(D, scaled_id, -z / rho);
    const double step = (next - y).norm();
    y = next;
    if (step <= sp.tol) return y;
  }
  throw Error(ErrorCode::kMaxIterExceeded, "derivative VI iteration did not converge");
}

SensitivityReport analyze_sensitivity(const VIProblem& p, const SolverParams& sp) {
  SensitivityReport rep;
  HypothesisLog& log = rep.hypotheses;
  auto fail = [&](const std::string& clause, const std::string& name, const std::string& detail) {
    add(log, clause, name, CheckStatus::kFail, detail);
    rep.failure = clause + " " + name + ": " + detail;
    return rep;
  };

  rep.x_prime = p.x.derivative_at_zero();
  add(log, "(i)", "x differentiable at t=0", p.x.d0() ? CheckStatus::kPass : CheckStatus::kSampledOnly,
      p.x.d0() ? "analytic x'(0)" : "x'(0) estimated by forward differences");
  add(log, "(ii)", "A uniformly Lipschitz and strongly monotone", CheckStatus::kSampledOnly,
      "randomized audit passed: M=" + num(p.A.lipschitz()) + ", alpha=" + num(p.A.strong_monotonicity()));

  const ViSolution sol = solve_vi_detailed(p, 0.0, sp);
  rep.y0 = sol.y;
  rep.solver_iterations = sol.iterations;
  rep.closed_form_solve = sol.closed_form;
  rep.rho = sol.rho;
  rep.residuals["fixed_point"] = sol.fixed_point_residual;
  rep.v0 = p.x(0.0) - p.A(0.0, rep.y0);

  try {
    rep.semi = semi_derivative(p.A, rep.y0, std::min(0.1, p.t_max()), sp.seed);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotSemidifferentiable || e.code() == ErrorCode::kAuditFailed) {
      return fail("(iii)", "A semi-differentiable at y(0)", e.what());
    }
    throw;
  }
  add(log, "(iii)", "A semi-differentiable at y(0)",
      rep.semi->analytic() ? CheckStatus::kPass : CheckStatus::kSampledOnly,
      rep.semi->analytic() ? "analytic Jacobians" : "Richardson tail " + num(rep.semi->richardson_tail));

  const std::size_t before = log.size();
  try {
    rep.second_order = d2e_closed_form(p.f, rep.y0, rep.v0, &log, p.t_max());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kHypothesisViolated) throw;
    const auto* wa = p.f.get_if<WeightedAbs1D>();
    const bool at_kink = wa && std::abs(rep.y0(0) - wa->b(0.0)) <= 1e-9 * (1.0 + std::abs(wa->b(0.0)));
    if (at_kink) {
      const CshReport csh = csh_probe(p.f, rep.y0, rep.v0);
      if (csh.found != CshFound::kYes) {
        std::string detail = "no convergent supporting hyperplane (CSH probe: " +
                             std::string(to_string(csh.found)) + ")";
        if (!csh.triples.empty()) detail += ", beta_tau -> " + num(csh.triples.back().beta);
        return fail("(v)", "d2e f(y0|v0) proper", detail + "; d2e f(y0|v0) is not in Gamma_0");
      }
    }
    rep.failure = log.size() > before ? log.back().clause + " " + log.back().name + ": " + log.back().detail
                                      : std::string(e.what());
    return rep;
  }
  if (p.f.dim() == 1 && (p.f.get_if<WeightedAbs1D>() || p.f.get_if<SmoothFunction>())) {
    const CshReport csh = csh_probe(p.f, rep.y0, rep.v0);
    const double at0 = (*rep.second_order)(Vector::Zero(1)).value();
    if (csh.found == CshFound::kYes) {
      if (at0 < csh.limit->beta - 1e-9 || at0 > 1e-9) {
        return fail("(v)", "d2e f(y0|v0) proper",
                    "closed form at 0 is " + num(at0) + ", outside [beta, 0] with beta=" + num(csh.limit->beta));
      }
      add(log, "(v)", "d2e f(y0|v0) proper", CheckStatus::kPass,
          "CSH limit (z, xi, beta) = (" + num(csh.limit->z) + ", " + num(csh.limit->xi) + ", " +
              num(csh.limit->beta) + "), d2e f(0) = " + num(at0));
    } else {
      add(log, "(v)", "d2e f(y0|v0) proper", CheckStatus::kPass,
          "closed form is proper; CSH probe " + std::string(to_string(csh.found)));
    }
  } else {
    add(log, "(v)", "d2e f(y0|v0) proper", CheckStatus::kPass,
        std::string(rep.second_order->kind_name()) + " closed form is proper, convex and lsc");
  }

  const DerivedSecondOrder& D = *rep.second_order;
  const SemiDerivative& S = *rep.semi;
  const Vector yp = solve_derivative_vi(D, S, rep.x_prime, sp);

  // x' - S(y') must be a subgradient of D at y'.
  const ExtReal dy = D(yp);
  if (!dy.is_finite()) throw Error(ErrorCode::kPostconditionFailed, "derivative outside dom d2e f");
  const Vector r = rep.x_prime - S(yp);
  std::mt19937_64 rng(sp.seed);
  std::normal_distribution<double> normal;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kResidualProbes; ++k) {
    Vector d(D.dim());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
    const Vector z = D.project_to_domain(yp + (1.0 + yp.norm()) * d);
    const ExtReal dz = D(z);
    if (!dz.is_finite()) continue;
    const double slack = dz.value() - dy.value() - r.dot(z - yp);
    const double tol = kResidualTol * (1.0 + std::abs(dz.value()) + std::abs(dy.value()) + r.norm() * (z - yp).norm());
    worst = std::min(worst, slack);
    if (slack < -tol) {
      throw Error(ErrorCode::kPostconditionFailed,
                  "derivative VI violated by " + num(-slack) + " at probe " + vec_str(z));
    }
  }
  rep.residuals["derivative_vi_min_slack"] = std::isfinite(worst) ? worst : 0.0;
  rep.yprime = yp;
  return rep;
}

SensitivityReport solve_sensitivity(const VIProblem& p, const SolverParams& sp) {
  SensitivityReport rep = analyze_sensitivity(p, sp);
  if (!rep.ok()) throw Error(ErrorCode::kHypothesisViolated, rep.failure);
  return rep;
}

ExtReal MinProblemData::objective(const Vector& x) const {
  return (*D)(x) + ExtReal(0.5 * x.dot(Q * x) + linear.dot(x));
}

ParamOperator gradient_operator(const SmoothFunction& g, double t_max, std::uint64_t seed) {
  const int n = g.dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k = 0; k <= 16; ++k) {
    const double t = t_max * k / 16.0;
    for (int j = 0; j < 8; ++j) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x(i) = j == 0 ? 0.0 : normal(rng);
      const Matrix h = g.hess_xx(t, x);
      const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (h + h.transpose())).eigenvalues();
      lo = std::min(lo, ev.minCoeff());
      hi = std::max(hi, ev.cwiseAbs().maxCoeff());
    }
  }
  if (hi > lo) {
    // Curvature between samples is not observed.
    lo *= 1.0 - 1e-6;
    hi *= 1.0 + 1e-6;
  }
  return ParamOperator(n, g.grad_x, hi, lo, g.hess_xx, g.hess_tx);
}

MinProblemData derivative_min_problem(const ParamFunction& f, const SmoothFunction& g, const VectorPath& l,
                                      const SolverParams& sp) {
  const VIProblem p = build_problem(gradient_operator(g, l.t_max(), sp.seed), f, l, sp.seed);
  const SensitivityReport rep = solve_sensitivity(p, sp);
  MinProblemData out;
  out.y0 = rep.y0;
  out.D = rep.second_order;
  out.Q = g.hess_xx(0.0, rep.y0);
  out.linear = g.hess_tx(0.0, rep.y0) - l.derivative_at_zero();
  out.minimizer = minimize_second_order_model(*out.D, out.Q, out.linear);
  out.yprime = *rep.yprime;
  if ((out.minimizer - out.yprime).norm() > 1e-8 * (1.0 + out.yprime.norm())) {
    throw Error(ErrorCode::kPostconditionFailed, "minimizer " + vec_str(out.minimizer) +
                                                     " differs from the sensitivity derivative " +
                                                     vec_str(out.yprime));
  }
  return out;
}

}  // namespace protodiff
