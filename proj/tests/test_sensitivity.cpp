#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "protodiff/catalog.hpp"
#include "protodiff/sensitivity.hpp"

using namespace protodiff;
using protodiff::testing::error_code_of;
using protodiff::testing::load_fixture;
using protodiff::testing::mat1;
using protodiff::testing::vec;

namespace {

ParamFunction abs_fn(ScalarPoly a, ScalarPoly b) {
  return ParamFunction::weighted_abs(poly_path(std::move(a)), poly_path(std::move(b)));
}

VectorPoly scalar_coeffs(const ScalarPoly& c) {
  VectorPoly out;
  for (double ck : c) out.push_back(vec({ck}));
  return out;
}

// A = c(t) y, f = a|y - b|, x = d.
VIProblem weighted_abs_problem(ScalarPoly a, ScalarPoly b, ScalarPoly c, ScalarPoly d) {
  MatrixPoly cm;
  for (double ck : c) cm.push_back(mat1(ck));
  return build_problem(affine_operator(cm, VectorPoly{vec({0.0})}, 1.0), abs_fn(a, b),
                       poly_path(scalar_coeffs(d)));
}

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << a, b;
  return m;
}

ParamFunction curved_constraint() { return quadratic_constraints({{diag2(2.0, 0.0), {vec({0.0, 1.0})}, {-1.0}}}); }

ParamFunction halfspace() { return quadratic_constraints({{Matrix::Zero(2, 2), {vec({1.0, 1.0})}, {-1.0}}}); }

SmoothFunction half_norm_sq(int n) {
  return *smooth_quadratic({Matrix::Identity(n, n)}, {Vector::Zero(n)}, {0.0}).get_if<SmoothFunction>();
}

// Forward quotient of the solution path; exact for small h on piecewise-affine paths.
Vector path_quotient(const VIProblem& p, double h) {
  return (solve_vi_at_t(p, h) - solve_vi_at_t(p, 0.0)) / h;
}

}  // namespace

TEST_CASE("semi-derivative of the identity") {
  const SemiDerivative S = semi_derivative(ParamOperator::identity(3), vec({1.0, -2.0, 0.5}));
  REQUIRE(S.analytic());
  CHECK(S.J->isApprox(Matrix::Identity(3, 3)));
  CHECK(S.s->norm() == 0.0);
  CHECK(S(vec({1.0, 2.0, 3.0})).isApprox(vec({1.0, 2.0, 3.0})));
}

TEST_CASE("numeric semi-derivative of (1+t)y at 1") {
  const ParamOperator A(1, [](double t, const Vector& y) { return Vector((1.0 + t) * y); }, 2.0, 1.0);
  const SemiDerivative S = semi_derivative(A, vec({1.0}));
  CHECK_FALSE(S.analytic());
  CHECK(S.richardson_tail < 1e-6);
  for (double w : {-2.0, 0.0, 0.5, 3.0}) CHECK(S(vec({w}))(0) == doctest::Approx(w + 1.0).epsilon(1e-9));
  CHECK(S.lipschitz == 2.0);
  CHECK(S.strong_monotonicity == 1.0);
}

TEST_CASE("analytic semi-derivative of y^3 + y + t at 0") {
  const ParamOperator A(
      1, [](double t, const Vector& y) { return vec({y(0) * y(0) * y(0) + y(0) + t}); }, 4.0, 1.0,
      [](double, const Vector& y) { return mat1(3.0 * y(0) * y(0) + 1.0); },
      [](double, const Vector&) { return vec({1.0}); });
  const SemiDerivative S = semi_derivative(A, vec({0.0}));
  CHECK((*S.J)(0, 0) == 1.0);
  CHECK((*S.s)(0) == 1.0);
  CHECK(S(vec({2.0}))(0) == 3.0);
}

TEST_CASE("numeric semi-derivative that does not settle") {
  // A(t,y) = y + sqrt(t): the difference quotient blows up like t^-1/2.
  const ParamOperator A(1, [](double t, const Vector& y) { return Vector(y.array() + std::sqrt(t)); }, 1.0, 1.0);
  CHECK(error_code_of([&] { semi_derivative(A, vec({0.0})); }) == ErrorCode::kNotSemidifferentiable);
}

TEST_CASE("semi-derivative audit rejects constants the linear part breaks") {
  // Claimed M = 1.5 but J = 2.
  const ParamOperator A(1, [](double, const Vector& y) { return Vector(2.0 * y); }, 1.5, 1.0);
  CHECK(error_code_of([&] { semi_derivative(A, vec({0.0})); }) == ErrorCode::kAuditFailed);
}

TEST_CASE("moving-multiplier weighted absolute value instance") {
  const VIProblem p = weighted_abs_problem({1.0, 1.0}, {0.0}, {1.0}, {3.0, 2.0});
  const SensitivityReport r = solve_sensitivity(p);
  CHECK(r.y0(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.v0(0) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.ok());
  CHECK((*r.yprime)(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.second_order->kind_name() == std::string("LINEAR_ON_CONE"));
  CHECK(r.closed_form_solve);
  CHECK(r.residuals.count("derivative_vi_min_slack") == 1);
  for (const char* clause : {"(i)", "(ii)", "(iii)", "(iv)", "(v)"}) {
    bool seen = false;
    for (const HypothesisCheck& h : r.hypotheses) seen = seen || h.clause == clause;
    CHECK_MESSAGE(seen, clause);
  }
}

TEST_CASE("kink with interior multiplier has zero derivative") {
  const SensitivityReport r = solve_sensitivity(weighted_abs_problem({1.0}, {0.0}, {1.0}, {0.0}));
  CHECK(r.y0(0) == 0.0);
  CHECK(r.second_order->kind_name() == std::string("POINT_INDICATOR"));
  CHECK((*r.yprime)(0) == 0.0);
}

TEST_CASE("the five weighted absolute value regimes against the path quotient") {
  struct Case {
    ScalarPoly a, b, c, d;
    double expected;
  };
  const Case cases[] = {
      {{1.0, 1.0}, {0.0}, {1.0}, {3.0, 2.0}, 1.0},
      {{1.0}, {1.0}, {1.0, 1.0}, {2.0, 3.0}, 2.0},
      {{1.0, 1.0}, {0.0, 0.0, 1.0}, {1.0}, {0.5, 1.0}, 0.0},
      {{1.0}, {1.0}, {1.0}, {0.0, -2.0}, -2.0},
      {{2.0, 1.0}, {5.0}, {2.0}, {1.0, 3.0}, 2.0},
  };
  for (const Case& c : cases) {
    const VIProblem p = weighted_abs_problem(c.a, c.b, c.c, c.d);
    const SensitivityReport r = solve_sensitivity(p);
    CHECK((*r.yprime)(0) == doctest::Approx(c.expected).epsilon(1e-9));
    CHECK((*r.yprime)(0) == doctest::Approx(path_quotient(p, 1e-4)(0)).epsilon(1e-3));
  }
}

TEST_CASE("moving kink is refused with the properness clause") {
  const VIProblem p = weighted_abs_problem({1.0}, {0.0, 1.0}, {1.0}, {0.0});
  const SensitivityReport r = analyze_sensitivity(p);
  CHECK_FALSE(r.ok());
  REQUIRE_FALSE(r.hypotheses.empty());
  CHECK(r.hypotheses.back().clause == "(v)");
  CHECK(r.hypotheses.back().status == CheckStatus::kFail);
  CHECK(r.failure.find("(v)") == 0);
  CHECK(error_code_of([&] { solve_sensitivity(p); }) == ErrorCode::kHypothesisViolated);
}

TEST_CASE("moving kink away from the solution fails clause (iv)") {
  // y0 = 3 > b(0) = 0 but b'(0) = 1.
  const VIProblem p = weighted_abs_problem({1.0}, {0.0, 1.0}, {1.0}, {4.0});
  const SensitivityReport r = analyze_sensitivity(p);
  CHECK_FALSE(r.ok());
  CHECK(r.failure.find("(iv)") == 0);
}

TEST_CASE("derivative minimization problem matches the engine") {
  SUBCASE("weighted absolute value recast") {
    const SmoothFunction g = half_norm_sq(1);
    const MinProblemData m =
        derivative_min_problem(abs_fn({1.0, 1.0}, {0.0}), g, poly_path(scalar_coeffs({3.0, 2.0})));
    CHECK(m.minimizer(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(m.minimizer(0) - m.yprime(0)) <= 1e-8);
  }
  SUBCASE("smooth stationarity") {
    const SmoothFunction g =
        *smooth_quadratic({mat1(1.0)}, {vec({0.0}), vec({1.0})}, {0.0}).get_if<SmoothFunction>();
    const MinProblemData m = derivative_min_problem(ParamFunction::zero(1), g, poly_path(scalar_coeffs({0.0})));
    CHECK(m.Q(0, 0) == 1.0);
    CHECK(m.linear(0) == 1.0);
    CHECK(m.minimizer(0) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("t-independent data") {
    Matrix P(2, 2);
    P << 2.0, 0.5, 0.5, 1.0;
    const SmoothFunction g = *smooth_quadratic({P}, {vec({1.0, -1.0})}, {0.0}).get_if<SmoothFunction>();
    const MinProblemData m =
        derivative_min_problem(ParamFunction::zero(2), g, poly_path(VectorPoly{vec({0.3, 0.7})}));
    CHECK(m.minimizer.norm() <= 1e-12);
    CHECK(m.objective(m.minimizer).value() == doctest::Approx(0.0));
  }
}

TEST_CASE("halfspace derivative QP") {
  PolyCone K{2, Matrix(1, 2), Matrix(0, 2)};
  K.eq << 1.0, 1.0;
  ConstraintSecondOrder curv{vec({0.0}), Matrix::Zero(1, 2), {Matrix::Zero(2, 2)}};
  const DerivativeQpResult r =
      constrained_derivative_qp(K, Polytope{{vec({0.5})}}, Matrix::Identity(2, 2), vec({-1.0, 0.0}), curv);
  CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.x(1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.kkt_residual <= 1e-8);

  const SmoothFunction g = half_norm_sq(2);
  const MinProblemData m = derivative_min_problem(halfspace(), g, poly_path(VectorPoly{vec({1.0, 1.0}), vec({1.0, 0.0})}));
  CHECK(m.y0.isApprox(vec({0.5, 0.5})));
  CHECK((m.yprime - vec({0.5, -0.5})).norm() <= 1e-10);
}

TEST_CASE("inactive constraints leave the unconstrained model") {
  Matrix Q(2, 2);
  Q << 3.0, 1.0, 1.0, 2.0;
  const Vector lin = vec({1.0, -2.0});
  ConstraintSecondOrder curv{vec({0.0}), Matrix::Zero(1, 2), {Matrix::Zero(2, 2)}};
  const DerivativeQpResult r =
      constrained_derivative_qp(PolyCone::whole_space(2), Polytope{{vec({0.0})}}, Q, lin, curv);
  CHECK((Q * r.x + lin).norm() <= 1e-10);

  const VIProblem p = build_problem(ParamOperator::identity(2), halfspace(), poly_path(VectorPoly{vec({0.1, 0.2}), vec({1.0, -3.0})}));
  const SensitivityReport s = solve_sensitivity(p);
  CHECK((*s.yprime - vec({1.0, -3.0})).norm() <= 1e-10);
}

TEST_CASE("curved constraint derivative against the high-precision path oracle") {
  const auto fx = load_fixture("curved_constraint_oracle.json");
  const VIProblem p =
      build_problem(ParamOperator::identity(2), curved_constraint(), poly_path(VectorPoly{vec({2.0, 2.0}), vec({1.0, 0.0})}));
  const SensitivityReport r = solve_sensitivity(p);
  CHECK(r.second_order->kind_name() == std::string("CONE_QUADRATIC_SUPPORT"));
  CHECK(r.y0(0) == doctest::Approx(fx["y0"][0].get<double>()).epsilon(1e-9));
  CHECK(r.y0(1) == doctest::Approx(fx["y0"][1].get<double>()).epsilon(1e-9));
  CHECK(std::abs((*r.yprime)(0) - fx["yprime"][0].get<double>()) <= 1e-4);
  CHECK(std::abs((*r.yprime)(1) - fx["yprime"][1].get<double>()) <= 1e-4);
  bool sampled = false;
  for (const HypothesisCheck& h : r.hypotheses) sampled = sampled || h.status == CheckStatus::kSampledOnly;
  CHECK(sampled);
}

TEST_CASE("nonsymmetric operator uses the forward-backward derivative solve") {
  Matrix J(2, 2);
  J << 1.0, 0.5, -0.5, 1.0;
  const ParamOperator A = affine_operator({J}, {Vector::Zero(2)}, 1.0);
  const VIProblem p = build_problem(A, halfspace(), poly_path(VectorPoly{vec({2.0, 1.0}), vec({1.0, 0.5})}));
  const SensitivityReport r = solve_sensitivity(p);
  const Vector fd = path_quotient(p, 1e-5);
  CHECK((*r.yprime - fd).norm() <= 1e-6);
}

TEST_CASE("t-independent data give a zero derivative") {
  {
    const SensitivityReport r = solve_sensitivity(weighted_abs_problem({2.0}, {1.0}, {3.0}, {5.0}));
    CHECK(std::abs((*r.yprime)(0)) <= 1e-8);
  }
  {
    const VIProblem p =
        build_problem(ParamOperator::identity(2), curved_constraint(), poly_path(VectorPoly{vec({2.0, 2.0})}));
    CHECK(solve_sensitivity(p).yprime->norm() <= 1e-8);
  }
}

TEST_CASE("derivative VI residual holds on emitted derivatives") {
  const VIProblem p = build_problem(ParamOperator::identity(2), curved_constraint(),
                                    poly_path(VectorPoly{vec({2.0, 2.0}), vec({-1.0, 3.0})}));
  const SensitivityReport r = solve_sensitivity(p);
  CHECK(r.residuals.at("derivative_vi_min_slack") >= -1e-8);
}
