#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protodiff/ext_real.hpp"
#include "protodiff/param_function.hpp"
#include "protodiff/param_operator.hpp"

namespace protodiff {

class TauSchedule {
 public:
  // Must be strictly decreasing and positive.
  explicit TauSchedule(std::vector<double> values);
  // 2^-k for k = k_first..k_last.
  static TauSchedule dyadic(int k_first = 1, int k_last = 20);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// (f(tau, x + tau w) - f(tau, x) - tau <v, w>) / tau^2. Throws X_NOT_IN_DOMAIN
// when f(tau, x) = +inf.
ExtReal delta2_quotient(const ParamFunction& f, const Vector& x, const Vector& v, double tau,
                        const Vector& w);

// (A(tau, x + tau w) - v) / tau.
Vector delta_op_quotient(const ParamOperator& A, const Vector& x, const Vector& v, double tau,
                         const Vector& w);

enum class EpiClass { kFiniteLimit, kDivergesMinusInf, kDivergesPlusInf, kInconclusive };
std::string_view to_string(EpiClass c);

struct EpiTauRow {
  double tau = 0.0;
  ExtReal lower;
  ExtReal upper;
};

struct EpiProbeEntry {
  Vector w;
  ExtReal lower;  // at the smallest tau
  ExtReal upper;
  EpiClass classification = EpiClass::kInconclusive;
  std::vector<EpiTauRow> rows;

  // The upper estimate when the classification is FINITE_LIMIT.
  std::optional<double> limit() const;
};

inline constexpr double kDivergenceThreshold = 1e6;

// Lower estimate: inf of the quotient over the ball of radius sqrt(tau)
// around w. Upper estimate: inf over the ball of radius tau^(3/4), which is
// the value of a recovery sequence w_tau -> w. 1-D and 2-D only.
EpiProbeEntry epi_limit_probe(const ParamFunction& f, const Vector& x, const Vector& v,
                              const Vector& w, const TauSchedule& sched = TauSchedule::dyadic());

struct CshTriple {
  double tau = 0.0;
  double z = 0.0;
  double xi = 0.0;
  double beta = 0.0;
};

enum class CshFound { kYes, kNo, kInconclusive };
std::string_view to_string(CshFound c);

struct CshReport {
  CshFound found = CshFound::kInconclusive;
  std::optional<CshTriple> limit;  // tau field is 0
  std::string family;              // candidate family of the reported sequence
  std::vector<CshTriple> triples;
};

// Supporting affine minorants w -> beta + xi w of the quotient touching it at
// z, for 1-D weighted absolute values and 1-D smooth functions.
CshReport csh_probe(const ParamFunction& f, const Vector& x, const Vector& v,
                    const TauSchedule& sched = TauSchedule::dyadic());

std::string epi_probe_csv(const std::vector<EpiProbeEntry>& entries);
std::string csh_csv(const CshReport& report);

}  // namespace protodiff
