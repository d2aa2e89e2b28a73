#include <cmath>
#include <random>

#include "brute_force.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "protodiff/catalog.hpp"
#include "protodiff/prox.hpp"

using namespace protodiff;
using protodiff::testing::error_code_of;
using protodiff::testing::mat1;
using protodiff::testing::vec;

namespace {

ParamFunction abs_fn(ScalarPoly a, ScalarPoly b) {
  return ParamFunction::weighted_abs(poly_path(std::move(a)), poly_path(std::move(b)));
}

// A = c(t) y, f = a|y - b|, x = d.
VIProblem weighted_abs_problem(ScalarPoly a, ScalarPoly b, ScalarPoly c, ScalarPoly d) {
  MatrixPoly cm;
  for (double ck : c) cm.push_back(mat1(ck));
  VectorPoly dv;
  for (double dk : d) dv.push_back(vec({dk}));
  return build_problem(affine_operator(cm, VectorPoly{vec({0.0})}, 1.0), abs_fn(a, b), poly_path(dv));
}

ParamFunction halfspace() {
  return quadratic_constraints({{Matrix::Zero(2, 2), {vec({1.0, 1.0})}, {-1.0}}});
}

}  // namespace

TEST_CASE("soft-threshold prox of weighted absolute values") {
  CHECK(moreau_prox(abs_fn({1.0}, {0.0}), 0.0, vec({3.0}), 1.0)(0) == doctest::Approx(2.0));
  CHECK(moreau_prox(abs_fn({2.0}, {1.0}), 0.0, vec({5.0}), 1.0)(0) == doctest::Approx(3.0));
  CHECK(moreau_prox(abs_fn({2.0}, {1.0}), 0.0, vec({2.5}), 1.0)(0) == 1.0);
  CHECK(moreau_prox(abs_fn({1.0, 1.0}, {0.0, 1.0}), 0.5, vec({-3.0}), 0.5)(0) ==
        doctest::Approx(-3.0 + 0.75));
}

TEST_CASE("indicator prox is the projection for any rho") {
  for (double rho : {0.1, 1.0, 7.0}) {
    const Vector y = moreau_prox(halfspace(), 0.0, vec({1.0, 1.0}), rho);
    CHECK(y(0) == doctest::Approx(0.5));
    CHECK(y(1) == doctest::Approx(0.5));
  }
}

TEST_CASE("smooth prox by damped Newton") {
  // g = 1/2 x'diag(2,4)x + (1,-1)'x, prox with rho = 1 solves (P + I) y = x - q.
  Matrix P = Matrix::Zero(2, 2);
  P.diagonal() << 2.0, 4.0;
  const ParamFunction g = smooth_quadratic({P}, {vec({1.0, -1.0})}, {0.0});
  const Vector y = moreau_prox(g, 0.0, vec({4.0, 6.0}), 1.0);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(7.0 / 5.0));

  SmoothFunction soft;
  soft.dim = 1;
  soft.value = [](double, const Vector& x) { return std::log(std::cosh(x(0))); };
  soft.grad_x = [](double, const Vector& x) { return vec({std::tanh(x(0))}); };
  soft.hess_xx = [](double, const Vector& x) { return mat1(1.0 / std::pow(std::cosh(x(0)), 2)); };
  soft.hess_tx = [](double, const Vector&) { return vec({0.0}); };
  const Vector z = moreau_prox(ParamFunction(soft), 0.0, vec({20.0}), 3.0);
  CHECK(z(0) + 3.0 * std::tanh(z(0)) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("custom prox oracle is checked against the subgradient inequality") {
  CustomFunction c;
  c.dim = 1;
  c.value = [](double, const Vector& x) { return ExtReal(std::abs(x(0))); };
  c.prox = [](double, const Vector& x, double) { return Vector(x); };  // wrong
  CHECK(error_code_of([&] { moreau_prox(ParamFunction(c), 0.0, vec({3.0}), 1.0); }) ==
        ErrorCode::kOracleInconsistent);
  c.prox = [](double, const Vector& x, double rho) {
    return vec({x(0) > rho ? x(0) - rho : (x(0) < -rho ? x(0) + rho : 0.0)});
  };
  CHECK(moreau_prox(ParamFunction(c), 0.0, vec({3.0}), 1.0)(0) == doctest::Approx(2.0));
}

TEST_CASE("project_polyhedron examples") {
  Matrix M(1, 2);
  M << 1, 1;
  Vector y = project_polyhedron(M, vec({1.0}), vec({1.0, 1.0}));
  CHECK(y.isApprox(vec({0.5, 0.5})));

  Matrix box(2, 2);
  box << 1, 0, -1, 0;
  y = project_polyhedron(box, vec({1.0, 0.0}), vec({2.0, -1.0}));
  CHECK(y.isApprox(vec({1.0, -1.0})));

  Matrix tri(3, 2);
  tri << -1, 0, 0, -1, 1, 1;
  y = project_polyhedron(tri, vec({0.0, 0.0, 1.0}), vec({2.0, 2.0}));
  CHECK(y.isApprox(vec({0.5, 0.5})));

  Matrix bad(2, 1);
  bad << 1, -1;
  CHECK(error_code_of([&] { project_polyhedron(bad, vec({-1.0, -1.0}), vec({0.0})); }) ==
        ErrorCode::kInfeasibleSet);
}

TEST_CASE("project_polyhedron matches active-set enumeration on random polyhedra") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const int m = 1 + trial % 5;
    Matrix M(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = normal(rng);
    Vector q = Vector::Ones(m) + Vector(Vector::NullaryExpr(m, [&] { return std::abs(normal(rng)); }));
    Vector x = 3.0 * Vector(Vector::NullaryExpr(n, [&] { return normal(rng); }));
    const auto oracle = testing::brute_force_qp(Matrix::Identity(n, n), -x, Matrix(0, n), Vector(0), M, q);
    REQUIRE(oracle);
    CHECK((project_polyhedron(M, q, x) - *oracle).norm() < 1e-9);
  }
}

TEST_CASE("SQP projection onto a curved set matches the high-precision oracle") {
  const auto fixture = testing::load_fixture("curved_constraint_oracle.json");
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = 2.0;
  const ParamFunction f = quadratic_constraints({{P, {vec({0.0, 1.0})}, {-1.0}}});
  const auto* c = f.get_if<ConstraintIndicator>();
  REQUIRE(c);
  CHECK_FALSE(c->affine_in_x);
  const Vector y = project_constraints(*c, 0.0, vec({2.0, 2.0}));
  CHECK(y(0) == doctest::Approx(fixture["y0"][0].get<double>()).epsilon(1e-12));
  CHECK(y(1) == doctest::Approx(fixture["y0"][1].get<double>()).epsilon(1e-12));
  // interior points are fixed
  CHECK(project_constraints(*c, 0.0, vec({0.1, -2.0})).isApprox(vec({0.1, -2.0})));
}

TEST_CASE("solve_vi_at_t reproduces the weighted absolute value closed form") {
  const VIProblem p = weighted_abs_problem({1.0, 1.0}, {0.0}, {1.0}, {3.0, 2.0});
  CHECK(solve_vi_at_t(p, 0.2)(0) == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(solve_vi_at_t(p, 0.0)(0) == doctest::Approx(2.0).epsilon(1e-12));
  const VIProblem q = weighted_abs_problem({1.0}, {10.0}, {1.0}, {0.0});
  CHECK(solve_vi_at_t(q, 0.0)(0) == doctest::Approx(1.0).epsilon(1e-12));

  SolverParams iterate;
  iterate.closed_form = false;
  CHECK(solve_vi_at_t(p, 0.2, iterate)(0) == doctest::Approx(2.2).epsilon(1e-9));
  CHECK(solve_vi_at_t(q, 0.0, iterate)(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solver parameter validation") {
  const VIProblem p = weighted_abs_problem({1.0}, {0.0}, {1.0}, {0.0});
  SolverParams sp;
  sp.rho = 2.0;
  CHECK(error_code_of([&] { solve_vi_at_t(p, 0.0, sp); }) == ErrorCode::kInvalidArgument);
  sp.rho = 1.0;
  sp.tol = 0.0;
  CHECK(error_code_of([&] { solve_vi_at_t(p, 0.0, sp); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("iteration budget exhaustion is reported") {
  const VIProblem p = weighted_abs_problem({1.0}, {0.0}, {2.0, 1.0}, {5.0});
  SolverParams sp;
  sp.closed_form = false;
  sp.max_iter = 3;
  CHECK(error_code_of([&] { solve_vi_at_t(p, 0.5, sp); }) == ErrorCode::kMaxIterExceeded);
}

TEST_CASE("fixed-point residuals contract at the textbook rate") {
  Matrix a(2, 2);
  a << 2.0, 1.0, -1.0, 3.0;
  const VIProblem p = build_problem(affine_operator({a}, {vec({0.0, 0.0})}, 1.0), halfspace(),
                                    VectorPath::constant(vec({4.0, 3.0})));
  for (double rho_scale : {0.5, 1.0, 1.5}) {
    SolverParams sp;
    const double alpha = p.A.strong_monotonicity();
    const double m = p.A.lipschitz();
    sp.rho = rho_scale * alpha / (m * m);
    const ViSolution sol = solve_vi_detailed(p, 0.0, sp);
    const double bound = std::sqrt(1.0 - 2.0 * *sp.rho * alpha + *sp.rho * *sp.rho * m * m) + 1e-6;
    REQUIRE(sol.step_norms.size() > 3);
    for (std::size_t k = 1; k < sol.step_norms.size(); ++k) {
      if (sol.step_norms[k - 1] < 1e-12) break;
      CHECK(sol.step_norms[k] / sol.step_norms[k - 1] <= bound);
    }
  }
}

TEST_CASE("identity operator with an indicator gives the projection") {
  Matrix tri(3, 2);
  tri << -1, 0, 0, -1, 1, 1;
  const ParamFunction f = quadratic_constraints({{Matrix::Zero(2, 2), {vec({-1.0, 0.0})}, {0.0}},
                                                 {Matrix::Zero(2, 2), {vec({0.0, -1.0})}, {0.0}},
                                                 {Matrix::Zero(2, 2), {vec({1.0, 1.0})}, {-1.0}}});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x = vec({normal(rng), normal(rng)});
    const VIProblem p = build_problem(ParamOperator::identity(2), f, VectorPath::constant(x));
    CHECK((solve_vi_at_t(p, 0.0) - project_polyhedron(tri, vec({0.0, 0.0, 1.0}), x)).norm() <= 1e-10);
  }
}

TEST_CASE("solution map is 1/alpha-Lipschitz") {
  Matrix a(2, 2);
  a << 1.5, 0.7, -0.7, 2.0;
  const ParamOperator op = affine_operator({a}, {vec({0.3, -0.2})}, 1.0);
  const double alpha = op.strong_monotonicity();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 3.0);
  SolverParams sp;
  for (int k = 0; k < 32; ++k) {
    const Vector x1 = vec({normal(rng), normal(rng)});
    const Vector x2 = vec({normal(rng), normal(rng)});
    const Vector y1 = solve_vi_at_t(build_problem(op, halfspace(), VectorPath::constant(x1)), 0.0, sp);
    const Vector y2 = solve_vi_at_t(build_problem(op, halfspace(), VectorPath::constant(x2)), 0.0, sp);
    CHECK((y2 - y1).norm() <= (x2 - x1).norm() / alpha + 2.0 * sp.tol);
  }
}
