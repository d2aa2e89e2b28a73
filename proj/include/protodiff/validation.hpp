#pragma once

#include <optional>
#include <string>
#include <vector>

#include "protodiff/ext_real.hpp"
#include "protodiff/sensitivity.hpp"

namespace protodiff {

// Forward steps h 2^-k, k = 0..K.
struct FDSchedule {
  double h = 0.1;
  int K = 10;

  std::vector<double> steps() const;
};

struct FdResult {
  Vector estimate;
  double error_estimate = 0.0;
  std::vector<double> steps;
  std::vector<Vector> quotients;  // (y(h_k) - y(0)) / h_k
};

// Richardson limit of the forward quotients of the solution path; the step
// is capped at t_max. NO_CONVERGENCE when the tail does not shrink below
// 1e-3 (1 + |estimate|).
FdResult finite_difference_derivative(const VIProblem& p, const SolverParams& sp = {}, const FDSchedule& fd = {});

enum class Verdict { kPass, kMismatch, kHypothesisViolated };
std::string_view to_string(Verdict v);

struct VerifyReport {
  Verdict verdict = Verdict::kMismatch;
  std::optional<SensitivityReport> sensitivity;
  std::optional<FdResult> fd;  // always attempted; oracle only
  double difference = 0.0;
  double tol = 0.0;
  std::string detail;
};

// Never throws: errors from either side become report content.
VerifyReport verify_theorem(const VIProblem& p, const SolverParams& sp = {}, const FDSchedule& fd = {},
                            double tol = 1e-4);

// Closed interval with extended-real endpoints; empty when lo > hi.
struct Interval {
  ExtReal lo;
  ExtReal hi;

  static Interval empty() { return {ExtReal::plus_inf(), ExtReal::minus_inf()}; }
  bool is_empty() const { return lo > hi; }
};

struct SubdiffSample {
  double w = 0.0;
  Interval quotient_side;  // subdifferential of the second-order quotient at w
  Interval operator_side;  // (df(tau, x + tau w) - v) / tau
  bool agree = false;
};

struct SubdiffReport {
  bool pass = false;
  double tau = 0.0;
  std::vector<SubdiffSample> samples;
};

// Compares both sides at `probes` random w in [-3, 3] plus the kink and
// domain endpoints of the quotient. Endpoints agree within 1e-10 (relative).
// 1-D weighted absolute value, smooth and affine-indicator variants only.
SubdiffReport subdiff_consistency(const ParamFunction& f, double x, double v, double tau, int probes = 32,
                                  std::uint64_t seed = kDefaultSeed);

// f*(t, u) for the 1-D catalog variants.
ExtReal conjugate_value(const ParamFunction& f, double t, double u);

struct PhiReport {
  std::vector<double> t;
  std::vector<double> phi;
  double d1 = 0.0;  // Phi'(0)
  double d2 = 0.0;  // Phi''(0)
  bool nonnegative = false;
  bool zero_at_origin = false;
  bool stationary = false;  // |Phi'(0)| <= 1e-6
  std::string note;
};

// Phi(t) = f*(t, v) + f(t, x) - v x. CONJUGATE_INFINITE when v leaves dom
// f*(t, .) at a sample.
PhiReport phi_gap(const ParamFunction& f, double x, double v, const std::vector<double>& t_samples);

struct ConjugateIdentityReport {
  std::vector<double> s;
  std::vector<ExtReal> legendre;  // discrete conjugate of d2e f(x|v)
  std::vector<ExtReal> rhs;       // d2e f*(v|x)(s) + Phi''(0)/2
  double max_error = 0.0;
  bool pass = false;
};

// Discrete Legendre transform on 4001 points of [-5, 5] against the
// extrapolated quotient of f* on the s-grid, within 1e-6.
ConjugateIdentityReport conjugate_identity(const ParamFunction& f, double x, double v,
                                           const std::vector<double>& s_grid);

}  // namespace protodiff
