#include "protodiff/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

constexpr double kFdTailTol = 1e-3;
constexpr double kEndpointTol = 1e-10;
constexpr double kConjugateTol = 1e-6;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

struct Tableau {
  Vector value;
  double tail = std::numeric_limits<double>::infinity();
};

// First-order Richardson table; returns the entry whose column changes least.
Tableau richardson_best(const std::vector<Vector>& q) {
  const std::size_t n = q.size();
  std::vector<std::vector<Vector>> T(n);
  Tableau best{q.back(), std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < n; ++k) {
    T[k].push_back(q[k]);
    for (std::size_t j = 1; j <= k; ++j) {
      const Vector& a = T[k][j - 1];
      const Vector& b = T[k - 1][j - 1];
      T[k].push_back(a + (a - b) / (std::ldexp(1.0, static_cast<int>(j)) - 1.0));
    }
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const double tail = (T[k][j] - T[k - 1][j]).norm();
      if (tail < best.tail) best = {T[k][j], tail};
    }
  }
  return best;
}

struct AffineInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

const ConstraintIndicator* affine_1d_indicator(const ParamFunction& f) {
  const auto* c = f.get_if<ConstraintIndicator>();
  return c && c->dim == 1 && c->affine_in_x ? c : nullptr;
}

AffineInterval indicator_interval(const ConstraintIndicator& c, double t) {
  const Vector zero = Vector::Zero(1);
  const Vector h = c.value(t, zero);
  const Matrix g = c.grad_x(t, zero);
  AffineInterval out;
  for (int i = 0; i < c.count; ++i) {
    if (g(i, 0) > 0.0) {
      out.hi = std::min(out.hi, -h(i) / g(i, 0));
    } else if (g(i, 0) < 0.0) {
      out.lo = std::max(out.lo, -h(i) / g(i, 0));
    } else if (h(i) > 0.0) {
      return {1.0, -1.0};
    }
  }
  return out;
}

bool near(double a, double b, double scale) { return std::abs(a - b) <= 16.0 * kEps * scale; }

double finite_abs(double x) { return std::isfinite(x) ? std::abs(x) : 0.0; }

Interval point(double x) { return {ExtReal(x), ExtReal(x)}; }

// (I - v) / tau
Interval shift_scale(const Interval& I, double v, double tau) {
  if (I.is_empty()) return I;
  return {(I.lo - ExtReal(v)) / tau, (I.hi - ExtReal(v)) / tau};
}

bool endpoints_close(const ExtReal& a, const ExtReal& b) {
  if (!a.is_finite() || !b.is_finite()) return a.kind() == b.kind();
  return std::abs(a.value() - b.value()) <= kEndpointTol * (1.0 + std::max(std::abs(a.value()), std::abs(b.value())));
}

bool intervals_agree(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return a.is_empty() && b.is_empty();
  return endpoints_close(a.lo, b.lo) && endpoints_close(a.hi, b.hi);
}

void require_subgradient(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kSubgradientInvalid, what);
}

// 5-point Gauss-Legendre nodes and weights on [0, 1].
constexpr double kGlNodes[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                                0.95308992296933200};
constexpr double kGlWeights[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                  0.23931433524968324, 0.11846344252809454};

}  // namespace

std::vector<double> FDSchedule::steps() const {
  if (!(h > 0.0) || K < 1) throw Error(ErrorCode::kInvalidArgument, "FD schedule needs h > 0 and K >= 1");
  std::vector<double> out;
  for (int k = 0; k <= K; ++k) out.push_back(h * std::ldexp(1.0, -k));
  return out;
}

FdResult finite_difference_derivative(const VIProblem& p, const SolverParams& sp, const FDSchedule& fd) {
  FDSchedule capped = fd;
  capped.h = std::min(fd.h, p.t_max());
  FdResult out;
  out.steps = capped.steps();
  const Vector y0 = solve_vi_at_t(p, 0.0, sp);
  for (double h : out.steps) out.quotients.push_back((solve_vi_at_t(p, h, sp) - y0) / h);
  const Tableau best = richardson_best(out.quotients);
  out.estimate = best.value;
  out.error_estimate = best.tail;
  if (best.tail > kFdTailTol * (1.0 + best.value.norm())) {
    throw Error(ErrorCode::kNoConvergence, "finite-difference tail " + num(best.tail) + " is not shrinking");
  }
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kMismatch:
      return "MISMATCH";
    case Verdict::kHypothesisViolated:
      return "HYPOTHESIS_VIOLATED";
  }
  return "?";
}

VerifyReport verify_theorem(const VIProblem& p, const SolverParams& sp, const FDSchedule& fd, double tol) {
  VerifyReport r;
  r.tol = tol;
  std::string fd_note;
  try {
    r.fd = finite_difference_derivative(p, sp, fd);
    std::ostringstream os;
    os.precision(12);
    os << "finite differences (oracle only): " << r.fd->estimate.transpose() << " +- " << r.fd->error_estimate;
    fd_note = os.str();
  } catch (const std::exception& e) {
    fd_note = std::string("finite differences failed: ") + e.what();
  }
  try {
    r.sensitivity = analyze_sensitivity(p, sp);
  } catch (const std::exception& e) {
    r.verdict = Verdict::kMismatch;
    r.detail = std::string("engine failed: ") + e.what() + "; " + fd_note;
    return r;
  }
  if (!r.sensitivity->ok()) {
    r.verdict = Verdict::kHypothesisViolated;
    r.detail = r.sensitivity->failure + "; " + fd_note;
    return r;
  }
  if (!r.fd) {
    r.verdict = Verdict::kMismatch;
    r.detail = fd_note;
    return r;
  }
  r.difference = (*r.sensitivity->yprime - r.fd->estimate).norm();
  r.sensitivity->residuals["fd_difference"] = r.difference;
  const bool pass = r.difference <= tol + r.fd->error_estimate;
  r.verdict = pass ? Verdict::kPass : Verdict::kMismatch;
  r.detail = "|y'(0) - FD| = " + num(r.difference) + (pass ? " <= " : " > ") + num(tol) + " + " +
             num(r.fd->error_estimate) + "; " + fd_note;
  return r;
}

SubdiffReport subdiff_consistency(const ParamFunction& f, double x, double v, double tau, int probes,
                                  std::uint64_t seed) {
  if (f.dim() != 1) throw Error(ErrorCode::kUnsupportedVariant, "subdifferential consistency is 1-D only");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  const auto* wa = f.get_if<WeightedAbs1D>();
  const auto* sm = f.get_if<SmoothFunction>();
  const auto* ind = affine_1d_indicator(f);
  if (!wa && !sm && !ind) throw Error(ErrorCode::kUnsupportedVariant, std::string(f.kind_name()));

  std::vector<double> ws;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int k = 0; k < probes; ++k) ws.push_back(unif(rng));

  std::function<Interval(double)> quotient_side;
  std::function<Interval(double)> operator_side;
  if (wa) {
    const double a0 = wa->a(0.0);
    const double b0 = wa->b(0.0);
    require_subgradient(x == b0 ? std::abs(v) <= a0 : std::abs(v - (x > b0 ? a0 : -a0)) <= 1e-9 * (1.0 + a0),
                        "v = " + num(v) + " is not in the subdifferential of f(0, .) at " + num(x));
    const double a = wa->a(tau);
    const double b = wa->b(tau);
    const double wk = (b - x) / tau;
    ws.insert(ws.end(), {wk, wk - 1e-3, wk + 1e-3});
    quotient_side = [=](double w) {
      const double scale = (std::abs(x) + std::abs(b) + tau * std::abs(w)) / tau;
      if (near(w, wk, scale)) return Interval{ExtReal((-a - v) / tau), ExtReal((a - v) / tau)};
      return point(((w > wk ? a : -a) - v) / tau);
    };
    operator_side = [=](double w) {
      const double z = x + tau * w;
      const double scale = std::abs(x) + std::abs(b) + tau * std::abs(w);
      const Interval sub = near(z, b, scale) ? Interval{ExtReal(-a), ExtReal(a)} : point(z > b ? a : -a);
      return shift_scale(sub, v, tau);
    };
  } else if (sm) {
    const Vector xv = Vector::Constant(1, x);
    require_subgradient(std::abs(sm->grad_x(0.0, xv)(0) - v) <= 1e-9 * (1.0 + std::abs(v)),
                        "v = " + num(v) + " differs from the gradient at " + num(x));
    const double g0 = sm->grad_x(tau, xv)(0);
    quotient_side = [=](double w) {
      constexpr int kPanels = 16;
      double integral = 0.0;
      for (int m = 0; m < kPanels; ++m) {
        for (int i = 0; i < 5; ++i) {
          const double s = (m + kGlNodes[i]) / kPanels;
          integral += kGlWeights[i] / kPanels * sm->hess_xx(tau, Vector::Constant(1, x + s * tau * w))(0, 0);
        }
      }
      return point((g0 - v) / tau + integral * w);
    };
    operator_side = [=](double w) { return point((sm->grad_x(tau, Vector::Constant(1, x + tau * w))(0) - v) / tau); };
  } else {
    const AffineInterval c0 = indicator_interval(*ind, 0.0);
    const double s0 = std::abs(x) + finite_abs(c0.lo) + finite_abs(c0.hi);
    const bool at_lo = near(x, c0.lo, s0);
    const bool at_hi = near(x, c0.hi, s0);
    require_subgradient(x >= c0.lo - 16 * kEps * s0 && x <= c0.hi + 16 * kEps * s0,
                        num(x) + " is outside C(0)");
    require_subgradient(v == 0.0 || (v > 0.0 && at_hi) || (v < 0.0 && at_lo),
                        "v = " + num(v) + " is not a normal vector at " + num(x));
    const AffineInterval c = indicator_interval(*ind, tau);
    if (x < c.lo || x > c.hi) throw Error(ErrorCode::kXNotInDomain, num(x) + " is outside C(tau)");
    const double wlo = (c.lo - x) / tau;
    const double whi = (c.hi - x) / tau;
    for (double e : {wlo, whi}) {
      if (std::isfinite(e)) ws.insert(ws.end(), {e, e - 1e-3, e + 1e-3});
    }
    auto normal = [](bool lo_edge, bool hi_edge) {
      return Interval{lo_edge ? ExtReal::minus_inf() : ExtReal(0.0), hi_edge ? ExtReal::plus_inf() : ExtReal(0.0)};
    };
    quotient_side = [=](double w) {
      const double scale = (std::abs(x) + tau * std::abs(w)) / tau + 1.0;
      const bool on_lo = std::isfinite(wlo) && near(w, wlo, scale + std::abs(wlo));
      const bool on_hi = std::isfinite(whi) && near(w, whi, scale + std::abs(whi));
      if (!on_lo && !on_hi && (w < wlo || w > whi)) return Interval::empty();
      const Interval n = normal(on_lo, on_hi);
      return Interval{n.lo + ExtReal(-v / tau), n.hi + ExtReal(-v / tau)};
    };
    operator_side = [=](double w) {
      const double z = x + tau * w;
      const double scale = std::abs(x) + tau * std::abs(w) + tau;
      const bool on_lo = std::isfinite(c.lo) && near(z, c.lo, scale + std::abs(c.lo));
      const bool on_hi = std::isfinite(c.hi) && near(z, c.hi, scale + std::abs(c.hi));
      if (!on_lo && !on_hi && (z < c.lo || z > c.hi)) return Interval::empty();
      return shift_scale(normal(on_lo, on_hi), v, tau);
    };
  }

  SubdiffReport rep;
  rep.tau = tau;
  rep.pass = true;
  for (double w : ws) {
    SubdiffSample s{w, quotient_side(w), operator_side(w), false};
    s.agree = intervals_agree(s.quotient_side, s.operator_side);
    rep.pass = rep.pass && s.agree;
    rep.samples.push_back(s);
  }
  return rep;
}

ExtReal conjugate_value(const ParamFunction& f, double t, double u) {
  if (f.dim() != 1) throw Error(ErrorCode::kUnsupportedVariant, "conjugates are 1-D only");
  if (const auto* wa = f.get_if<WeightedAbs1D>()) {
    if (std::abs(u) > wa->a(t)) return ExtReal::plus_inf();
    return ExtReal(u * wa->b(t));
  }
  if (const auto* ind = affine_1d_indicator(f)) {
    const AffineInterval c = indicator_interval(*ind, t);
    if (c.lo > c.hi) return ExtReal::minus_inf();
    if (u == 0.0) return ExtReal(0.0);
    const double edge = u > 0.0 ? c.hi : c.lo;
    return std::isfinite(edge) ? ExtReal(u * edge) : ExtReal::plus_inf();
  }
  if (const auto* sm = f.get_if<SmoothFunction>()) {
    // Newton on f'(t, z) = u; a flat Hessian with a nonzero residual means linear growth.
    Vector z = Vector::Zero(1);
    for (int it = 0; it < 200; ++it) {
      const double r = sm->grad_x(t, z)(0) - u;
      if (std::abs(r) <= 1e-14 * (1.0 + std::abs(u))) return ExtReal(u * z(0) - sm->value(t, z));
      const double h = sm->hess_xx(t, z)(0, 0);
      if (h <= 1e-14) return ExtReal::plus_inf();
      z(0) -= r / h;
    }
    throw Error(ErrorCode::kNoConvergence, "conjugate Newton iteration at u = " + num(u));
  }
  throw Error(ErrorCode::kUnsupportedVariant, std::string(f.kind_name()));
}

PhiReport phi_gap(const ParamFunction& f, double x, double v, const std::vector<double>& t_samples) {
  const Vector xv = Vector::Constant(1, x);
  auto phi = [&](double t) {
    const ExtReal c = conjugate_value(f, t, v);
    if (!c.is_finite()) throw Error(ErrorCode::kConjugateInfinite, "f*(" + num(t) + ", " + num(v) + ") = " + c.str());
    const ExtReal fx = f(t, xv);
    if (!fx.is_finite()) throw Error(ErrorCode::kXNotInDomain, "f(" + num(t) + ", x) = " + fx.str());
    return c.value() + fx.value() - v * x;
  };
  PhiReport r;
  r.nonnegative = true;
  for (double t : t_samples) {
    r.t.push_back(t);
    r.phi.push_back(phi(t));
    r.nonnegative = r.nonnegative && r.phi.back() >= -1e-12;
  }
  const double h = 1e-3;
  const double p0 = phi(0.0);
  const double p1 = phi(h);
  const double p2 = phi(2.0 * h);
  const double p3 = phi(3.0 * h);
  r.zero_at_origin = std::abs(p0) <= 1e-12;
  r.d1 = (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * h);
  r.d2 = (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) / (h * h);
  r.stationary = std::abs(r.d1) <= 1e-6;
  r.note = "forward-difference estimates; twice differentiability of Phi at 0 is not certified";
  return r;
}

ConjugateIdentityReport conjugate_identity(const ParamFunction& f, double x, double v,
                                           const std::vector<double>& s_grid) {
  const DerivedSecondOrder D = d2e_closed_form(f, Vector::Constant(1, x), Vector::Constant(1, v));
  constexpr int kGrid = 4001;
  std::vector<double> wg;
  std::vector<double> dg;
  for (int j = 0; j < kGrid; ++j) {
    const double w = -5.0 + 10.0 * j / (kGrid - 1);
    const ExtReal d = D(Vector::Constant(1, w));
    if (d.is_finite()) {
      wg.push_back(w);
      dg.push_back(d.value());
    }
  }
  const double half_d2 = 0.5 * phi_gap(f, x, v, {}).d2;
  const ExtReal base0 = conjugate_value(f, 0.0, v);
  if (!base0.is_finite()) throw Error(ErrorCode::kConjugateInfinite, "v outside dom f*(0, .)");

  ConjugateIdentityReport r;
  r.pass = true;
  for (double s : s_grid) {
    ExtReal leg = ExtReal::minus_inf();
    for (std::size_t j = 0; j < wg.size(); ++j) leg = std::max(leg, ExtReal(s * wg[j] - dg[j]));

    std::vector<Vector> q;
    bool infinite = false;
    for (int k = 4; k <= 14; ++k) {
      const double tau = std::ldexp(1.0, -k);
      const ExtReal base = conjugate_value(f, tau, v);
      if (!base.is_finite()) throw Error(ErrorCode::kConjugateInfinite, "v outside dom f*(tau, .)");
      const ExtReal moved = conjugate_value(f, tau, v + tau * s);
      if (!moved.is_finite()) {
        infinite = true;
        break;
      }
      q.push_back(Vector::Constant(1, (moved.value() - base.value() - tau * x * s) / (tau * tau)));
    }
    const ExtReal rhs = infinite ? ExtReal::plus_inf() : ExtReal(richardson_best(q).value(0) + half_d2);

    double err = 0.0;
    if (leg.is_finite() && rhs.is_finite()) {
      err = std::abs(leg.value() - rhs.value());
    } else if (leg.kind() != rhs.kind()) {
      err = std::numeric_limits<double>::infinity();
    }
    r.max_error = std::max(r.max_error, err);
    r.pass = r.pass && err <= kConjugateTol;
    r.s.push_back(s);
    r.legendre.push_back(leg);
    r.rhs.push_back(rhs);
  }
  return r;
}

}  // namespace protodiff
