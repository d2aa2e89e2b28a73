#include "protodiff/epi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

constexpr int kGridPoints = 33;
constexpr int kGoldenIters = 60;
constexpr int kTail = 4;
constexpr double kGrowthRatio = 1.3;
constexpr double kCauchyTol = 1e-3;
constexpr double kCshTol = 1e-6;

struct Min1D {
  double arg = 0.0;
  ExtReal value = ExtReal::plus_inf();
};

// Minimum of a convex function on [lo, hi]: grid, then golden section in
// the two cells around the best grid point.
Min1D minimize_interval(const std::function<ExtReal(double)>& fn, double lo, double hi) {
  Min1D best;
  if (hi <= lo) {
    best.arg = lo;
    best.value = fn(lo);
    return best;
  }
  int best_i = 0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double s = lo + (hi - lo) * i / (kGridPoints - 1);
    const ExtReal val = fn(s);
    if (i == 0 || val < best.value) {
      best = {s, val};
      best_i = i;
    }
  }
  const double cell = (hi - lo) / (kGridPoints - 1);
  double a = lo + cell * std::max(best_i - 1, 0);
  double b = lo + cell * std::min(best_i + 1, kGridPoints - 1);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  ExtReal fc = fn(c);
  ExtReal fd = fn(d);
  for (int it = 0; it < kGoldenIters; ++it) {
    // Ties (including two infinite values) move toward the best grid point.
    const bool keep_left = fc < fd || (fc == fd && std::abs(c - best.arg) <= std::abs(d - best.arg));
    if (keep_left) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = fn(d);
    }
  }
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

ExtReal ball_min(const std::function<ExtReal(const Vector&)>& q, const Vector& center, double r) {
  if (center.size() == 1) {
    return minimize_interval([&](double s) { return q(Vector::Constant(1, s)); }, center(0) - r,
                             center(0) + r)
        .value;
  }
  auto inner = [&](double s) {
    const double half = std::sqrt(std::max(0.0, r * r - (s - center(0)) * (s - center(0))));
    Vector p(2);
    p(0) = s;
    return minimize_interval(
               [&](double u) {
                 p(1) = u;
                 return q(p);
               },
               center(1) - half, center(1) + half)
        .value;
  };
  return minimize_interval(inner, center(0) - r, center(0) + r).value;
}

bool geometric_growth(const std::vector<ExtReal>& vals, int sign) {
  if (vals.size() < kTail + 1) return false;
  const std::size_t n = vals.size();
  for (std::size_t k = n - kTail; k < n; ++k) {
    const ExtReal& prev = vals[k - 1];
    const ExtReal& cur = vals[k];
    if (!prev.is_finite() || !cur.is_finite()) return false;
    if (sign * prev.value() <= 0.0 || sign * cur.value() <= 0.0) return false;
    if (cur.value() / prev.value() < kGrowthRatio) return false;
  }
  return true;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Linear extrapolation to tau = 0 through the last two schedule points.
double extrapolate(double t1, double v1, double t2, double v2) {
  return v2 + (v2 - v1) * t2 / (t1 - t2);
}

}  // namespace

TauSchedule::TauSchedule(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tau schedule");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || (k > 0 && !(values_[k] < values_[k - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "tau schedule must be positive and strictly decreasing");
    }
  }
}

TauSchedule TauSchedule::dyadic(int k_first, int k_last) {
  std::vector<double> v;
  for (int k = k_first; k <= k_last; ++k) v.push_back(std::ldexp(1.0, -k));
  return TauSchedule(std::move(v));
}

ExtReal delta2_quotient(const ParamFunction& f, const Vector& x, const Vector& v, double tau,
                        const Vector& w) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be > 0");
  if (x.size() != f.dim() || v.size() != f.dim() || w.size() != f.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "delta2_quotient arguments");
  }
  const ExtReal base = f(tau, x);
  if (!base.is_finite()) {
    throw Error(ErrorCode::kXNotInDomain, "f(tau, x) = +inf at tau=" + fmt(tau));
  }
  const ExtReal moved = f(tau, x + tau * w);
  if (!moved.is_finite()) return moved;
  return ExtReal((moved.value() - base.value() - tau * v.dot(w)) / (tau * tau));
}

Vector delta_op_quotient(const ParamOperator& A, const Vector& x, const Vector& v, double tau,
                         const Vector& w) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be > 0");
  return (A(tau, x + tau * w) - v) / tau;
}

std::string_view to_string(EpiClass c) {
  switch (c) {
    case EpiClass::kFiniteLimit: return "FINITE_LIMIT";
    case EpiClass::kDivergesMinusInf: return "DIVERGES_MINUS_INF";
    case EpiClass::kDivergesPlusInf: return "DIVERGES_PLUS_INF";
    case EpiClass::kInconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string_view to_string(CshFound c) {
  switch (c) {
    case CshFound::kYes: return "yes";
    case CshFound::kNo: return "no";
    case CshFound::kInconclusive: return "inconclusive";
  }
  return "?";
}

std::optional<double> EpiProbeEntry::limit() const {
  if (classification != EpiClass::kFiniteLimit) return std::nullopt;
  return upper.value();
}

EpiProbeEntry epi_limit_probe(const ParamFunction& f, const Vector& x, const Vector& v,
                              const Vector& w, const TauSchedule& sched) {
  if (f.dim() > 2) throw Error(ErrorCode::kDimensionTooLarge, "epi-limit probe supports dimension <= 2");
  if (w.size() != f.dim()) throw Error(ErrorCode::kDimensionMismatch, "probe direction dimension");
  EpiProbeEntry e;
  e.w = w;
  std::vector<ExtReal> lows, ups;
  for (double tau : sched.values()) {
    auto q = [&](const Vector& p) { return delta2_quotient(f, x, v, tau, p); };
    EpiTauRow row;
    row.tau = tau;
    row.lower = ball_min(q, w, std::sqrt(tau));
    row.upper = ball_min(q, w, std::pow(tau, 0.75));
    if (row.upper < row.lower) row.upper = row.lower;
    lows.push_back(row.lower);
    ups.push_back(row.upper);
    e.rows.push_back(row);
  }
  e.lower = lows.back();
  e.upper = ups.back();

  const bool minus = e.upper.is_minus_inf() ||
                     (e.upper.is_finite() && e.upper.value() < -kDivergenceThreshold) ||
                     geometric_growth(ups, -1);
  const bool plus = e.lower.is_plus_inf() ||
                    (e.lower.is_finite() && e.lower.value() > kDivergenceThreshold) ||
                    geometric_growth(lows, 1);
  if (minus) {
    e.classification = EpiClass::kDivergesMinusInf;
  } else if (plus) {
    e.classification = EpiClass::kDivergesPlusInf;
  } else {
    bool cauchy = ups.size() > kTail && e.upper.is_finite() &&
                  std::abs(e.upper.value()) < kDivergenceThreshold;
    for (std::size_t k = ups.size() - std::min<std::size_t>(ups.size(), kTail); cauchy && k < ups.size(); ++k) {
      cauchy = ups[k].is_finite() && ups[k - 1].is_finite() &&
               std::abs(ups[k].value() - ups[k - 1].value()) < kCauchyTol;
    }
    e.classification = cauchy ? EpiClass::kFiniteLimit : EpiClass::kInconclusive;
  }
  return e;
}

CshReport csh_probe(const ParamFunction& f, const Vector& x, const Vector& v, const TauSchedule& sched) {
  if (f.dim() != 1 || x.size() != 1 || v.size() != 1) {
    throw Error(ErrorCode::kUnsupportedVariant, "CSH probe supports 1-D functions only");
  }
  using Family = std::function<std::optional<CshTriple>(double)>;
  std::vector<std::pair<std::string, Family>> families;
  const double x0 = x(0);
  const double v0 = v(0);

  if (const auto* wa = f.get_if<WeightedAbs1D>()) {
    // q(w) is convex piecewise linear with its kink at k = (b(tau) - x)/tau,
    // slope sl to the left and sr to the right.
    struct Piece {
      double k, sl, sr;
    };
    auto piece = [wa, x0, v0](double tau) {
      const double a = wa->a(tau);
      return Piece{(wa->b(tau) - x0) / tau, -(a + v0) / tau, (a - v0) / tau};
    };
    auto q = [&f, x, v](double tau, double w) {
      return delta2_quotient(f, x, v, tau, Vector::Constant(1, w)).value();
    };
    families.emplace_back("minimizer", [=](double tau) -> std::optional<CshTriple> {
      const Piece p = piece(tau);
      if (p.sl > 0.0 || p.sr < 0.0) return std::nullopt;
      double z = p.k;
      if (p.sr == 0.0 && p.k < 0.0) z = 0.0;
      if (p.sl == 0.0 && p.k > 0.0) z = 0.0;
      return CshTriple{tau, z, 0.0, q(tau, z)};
    });
    families.emplace_back("kink", [=](double tau) -> std::optional<CshTriple> {
      const Piece p = piece(tau);
      const double xi = std::clamp(0.0, p.sl, p.sr);
      return CshTriple{tau, p.k, xi, q(tau, p.k) - xi * p.k};
    });
    families.emplace_back("origin", [=](double tau) -> std::optional<CshTriple> {
      const Piece p = piece(tau);
      const double xi = p.k > 0.0 ? p.sl : (p.k < 0.0 ? p.sr : std::clamp(0.0, p.sl, p.sr));
      return CshTriple{tau, 0.0, xi, q(tau, 0.0)};
    });
  } else if (const auto* s = f.get_if<SmoothFunction>()) {
    families.emplace_back("origin", [s, x, v0](double tau) -> std::optional<CshTriple> {
      return CshTriple{tau, 0.0, (s->grad_x(tau, x)(0) - v0) / tau, 0.0};
    });
  } else {
    throw Error(ErrorCode::kUnsupportedVariant,
                std::string("CSH probe does not support ") + std::string(f.kind_name()));
  }

  CshReport report;
  bool any_complete = false;
  for (const auto& [name, family] : families) {
    std::vector<CshTriple> seq;
    for (double tau : sched.values()) {
      const auto t = family(tau);
      if (!t) break;
      seq.push_back(*t);
    }
    if (seq.size() != sched.size()) continue;
    if (!any_complete) {
      report.triples = seq;
      report.family = name;
      any_complete = true;
    }
    if (seq.size() < kTail + 1) continue;
    // Cauchy test on the extrapolated triples over the tail.
    std::vector<CshTriple> ext;
    for (std::size_t k = seq.size() - kTail - 1; k + 1 < seq.size(); ++k) {
      const CshTriple& a = seq[k];
      const CshTriple& b = seq[k + 1];
      ext.push_back({0.0, extrapolate(a.tau, a.z, b.tau, b.z), extrapolate(a.tau, a.xi, b.tau, b.xi),
                     extrapolate(a.tau, a.beta, b.tau, b.beta)});
    }
    bool ok = true;
    for (const CshTriple& t : ext) ok = ok && std::isfinite(t.z) && std::isfinite(t.xi) && std::isfinite(t.beta);
    for (std::size_t k = 1; ok && k < ext.size(); ++k) {
      const double diff = std::max({std::abs(ext[k].z - ext[k - 1].z), std::abs(ext[k].xi - ext[k - 1].xi),
                                    std::abs(ext[k].beta - ext[k - 1].beta)});
      ok = diff < kCshTol;
    }
    if (ok) {
      report.found = CshFound::kYes;
      report.limit = ext.back();
      report.family = name;
      report.triples = seq;
      return report;
    }
  }
  report.found = any_complete && sched.size() > kTail ? CshFound::kNo : CshFound::kInconclusive;
  return report;
}

std::string epi_probe_csv(const std::vector<EpiProbeEntry>& entries) {
  std::ostringstream os;
  os << "w,tau,lower,upper,classification\n";
  for (const EpiProbeEntry& e : entries) {
    std::ostringstream w;
    for (Eigen::Index i = 0; i < e.w.size(); ++i) w << (i ? ";" : "") << fmt(e.w(i));
    for (const EpiTauRow& r : e.rows) {
      os << w.str() << ',' << fmt(r.tau) << ',' << r.lower.str() << ',' << r.upper.str() << ','
         << to_string(e.classification) << '\n';
    }
  }
  return os.str();
}

std::string csh_csv(const CshReport& report) {
  std::ostringstream os;
  os << "tau,z,xi,beta,family,found\n";
  for (const CshTriple& t : report.triples) {
    os << fmt(t.tau) << ',' << fmt(t.z) << ',' << fmt(t.xi) << ',' << fmt(t.beta) << ','
       << report.family << ',' << to_string(report.found) << '\n';
  }
  return os.str();
}

}  // namespace protodiff
