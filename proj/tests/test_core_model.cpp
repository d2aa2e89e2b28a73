#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "protodiff/catalog.hpp"
#include "protodiff/error.hpp"
#include "protodiff/ext_real.hpp"
#include "protodiff/problem.hpp"

using namespace protodiff;
using protodiff::testing::error_code_of;
using protodiff::testing::mat1;
using protodiff::testing::vec;

TEST_CASE("ExtReal ordering is total and rejects +inf + -inf") {
  CHECK(ExtReal::minus_inf() < ExtReal(-1e300));
  CHECK(ExtReal(1e300) < ExtReal::plus_inf());
  CHECK(ExtReal::minus_inf() < ExtReal::plus_inf());
  CHECK(ExtReal(1.0) + ExtReal::plus_inf() == ExtReal::plus_inf());
  CHECK(error_code_of([] { (void)(ExtReal::plus_inf() + ExtReal::minus_inf()); }) ==
        ErrorCode::kIndeterminateForm);
  CHECK((-2.0 * ExtReal::plus_inf()).is_minus_inf());
  CHECK((0.0 * ExtReal::plus_inf()) == ExtReal(0.0));
  CHECK(ExtReal::from_double(HUGE_VAL).is_plus_inf());
  CHECK(error_code_of([] { (void)ExtReal::from_double(std::nan("")); }) ==
        ErrorCode::kIndeterminateForm);
  CHECK(ExtReal::plus_inf().str() == "+inf");
}

TEST_CASE("paths spot-check analytic derivatives") {
  CHECK(error_code_of([] { ScalarPath([](double t) { return t * t; }, 1.0); }) ==
        ErrorCode::kPathCheckFailed);
  CHECK(error_code_of([] { ScalarPath([](double t) { return std::sin(t); }, 1.0, 1.0); }) ==
        ErrorCode::kPathCheckFailed);
  const ScalarPath ok([](double t) { return std::exp(t); }, 1.0, 1.0);
  CHECK(ok(0.5) == doctest::Approx(std::exp(0.5)));
  CHECK(error_code_of([&] { (void)ok(1.5); }) == ErrorCode::kInvalidArgument);

  const ScalarPath numeric([](double t) { return std::cos(t) + 3.0 * t; });
  CHECK(numeric.derivative_at_zero() == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(numeric.second_derivative_at_zero() == doctest::Approx(-1.0).epsilon(1e-5));

  const VectorPath vp = poly_path(VectorPoly{vec({1.0, 2.0}), vec({3.0, -1.0})});
  CHECK(vp.derivative_at_zero().isApprox(vec({3.0, -1.0})));
  CHECK(error_code_of([] {
          VectorPath(2, [](double t) { return vec({t, t}); }, vec({1.0, 0.0}));
        }) == ErrorCode::kPathCheckFailed);
}

TEST_CASE("polynomial paths carry exact derivatives") {
  const ScalarPath p = poly_path(ScalarPoly{1.0, -2.0, 3.0});
  CHECK(*p.d0() == -2.0);
  CHECK(*p.dd0() == 6.0);
  CHECK(p(0.5) == doctest::Approx(1.0 - 1.0 + 0.75));
}

TEST_CASE("build_problem accepts the identity case") {
  const VIProblem p = build_problem(ParamOperator::identity(1), ParamFunction::zero(1),
                                    VectorPath::constant(vec({0.0})));
  CHECK(p.dim() == 1);
}

TEST_CASE("build_problem audits strong monotonicity") {
  auto minus_y = [](double, const Vector& y) -> Vector { return -y; };
  CHECK(error_code_of([&] {
          build_problem(ParamOperator(1, [](double, const Vector& y) { return Vector(y); }, 1.0, 0.0),
                        ParamFunction::zero(1), VectorPath::constant(vec({0.0})));
        }) == ErrorCode::kAuditFailed);
  try {
    build_problem(ParamOperator(1, minus_y, 1.0, 1.0), ParamFunction::zero(1),
                  VectorPath::constant(vec({0.0})));
    FAIL("anti-monotone operator accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAuditFailed);
    CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
  }
}

TEST_CASE("build_problem rejects inconsistent dimensions and missing oracles") {
  CHECK(error_code_of([] {
          build_problem(ParamOperator::identity(2), ParamFunction::zero(1),
                        VectorPath::constant(vec({0.0})));
        }) == ErrorCode::kDimensionMismatch);
  CustomFunction c;
  c.dim = 1;
  c.value = [](double, const Vector& x) { return ExtReal(std::abs(x(0))); };
  CHECK(error_code_of([&] {
          build_problem(ParamOperator::identity(1), ParamFunction(c), VectorPath::constant(vec({0.0})));
        }) == ErrorCode::kMissingProxOracle);
}

TEST_CASE("function audit catches nonconvexity and improperness") {
  CustomFunction concave;
  concave.dim = 1;
  concave.value = [](double, const Vector& x) { return ExtReal(-x(0) * x(0)); };
  concave.prox = [](double, const Vector& x, double) { return Vector(x); };
  CHECK(error_code_of([&] { audit_function(ParamFunction(concave), 1.0); }) == ErrorCode::kAuditFailed);

  CustomFunction nowhere;
  nowhere.dim = 1;
  nowhere.value = [](double, const Vector&) { return ExtReal::plus_inf(); };
  CHECK(error_code_of([&] { audit_function(ParamFunction(nowhere), 1.0); }) == ErrorCode::kAuditFailed);

  CHECK(error_code_of([] {
          audit_function(ParamFunction::weighted_abs(poly_path(ScalarPoly{0.5, -1.0}),
                                                     ScalarPath::constant(0.0)),
                         1.0);
        }) == ErrorCode::kAuditFailed);
}

TEST_CASE("indicator of infeasible C(t) fails the properness audit") {
  // x <= -1 and -x <= -1 - t
  const ParamFunction f = quadratic_constraints({{mat1(0.0), {vec({1.0})}, {1.0}},
                                                 {mat1(0.0), {vec({-1.0})}, {1.0, 1.0}}});
  CHECK(error_code_of([&] {
          build_problem(ParamOperator::identity(1), f, VectorPath::constant(vec({0.0})));
        }) == ErrorCode::kAuditFailed);
}

TEST_CASE("weighted absolute value evaluates to a(t)|x - b(t)| exactly") {
  const ParamFunction f = ParamFunction::weighted_abs(poly_path(ScalarPoly{1.0, 1.0}),
                                                      poly_path(ScalarPoly{0.0, 0.0, 1.0}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0), ut(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double t = ut(rng);
    const double x = u(rng);
    CHECK(f(t, vec({x})).value() == (1.0 + t) * std::abs(x - t * t));
  }
}

TEST_CASE("constraint indicator is 0 on C(t) and +inf outside") {
  const ParamFunction f = quadratic_constraints({{Matrix::Zero(2, 2), {vec({1.0, 1.0})}, {-1.0}}});
  CHECK(f(0.0, vec({0.5, 0.5})) == ExtReal(0.0));
  CHECK(f(0.0, vec({0.2, -3.0})) == ExtReal(0.0));
  CHECK(f(0.0, vec({0.6, 0.5})).is_plus_inf());
}

TEST_CASE("affine operator constants come from the spectrum over t") {
  const ParamOperator op = affine_operator(MatrixPoly{mat1(1.0), mat1(1.0)}, VectorPoly{vec({0.0})}, 1.0);
  CHECK(op.strong_monotonicity() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(op.lipschitz() == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(op.jac_t(0.5, vec({2.0}))(0) == doctest::Approx(2.0));
  const ParamOperator id = affine_operator(MatrixPoly{Matrix::Identity(2, 2)}, VectorPoly{vec({0.0, 0.0})}, 1.0);
  CHECK(id.strong_monotonicity() == 1.0);
  CHECK(id.lipschitz() == 1.0);
}
