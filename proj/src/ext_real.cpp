#include "protodiff/ext_real.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "protodiff/error.hpp"

namespace protodiff {

ExtReal ExtReal::from_double(double v) {
  if (std::isnan(v)) throw Error(ErrorCode::kIndeterminateForm, "NaN is not an extended real");
  if (std::isinf(v)) return v > 0 ? plus_inf() : minus_inf();
  return ExtReal(v);
}

double ExtReal::value() const {
  if (!is_finite()) throw Error(ErrorCode::kInvalidArgument, "value() on infinite ExtReal " + str());
  return value_;
}

double ExtReal::to_double() const {
  switch (kind_) {
    case Kind::kPlusInf: return std::numeric_limits<double>::infinity();
    case Kind::kMinusInf: return -std::numeric_limits<double>::infinity();
    case Kind::kFinite: break;
  }
  return value_;
}

ExtReal ExtReal::operator-() const {
  switch (kind_) {
    case Kind::kPlusInf: return minus_inf();
    case Kind::kMinusInf: return plus_inf();
    case Kind::kFinite: break;
  }
  return ExtReal(-value_);
}

ExtReal operator+(const ExtReal& a, const ExtReal& b) {
  if ((a.is_plus_inf() && b.is_minus_inf()) || (a.is_minus_inf() && b.is_plus_inf())) {
    throw Error(ErrorCode::kIndeterminateForm, "(+inf) + (-inf)");
  }
  if (!a.is_finite()) return a;
  if (!b.is_finite()) return b;
  return ExtReal::from_double(a.value_ + b.value_);
}

ExtReal operator*(double s, const ExtReal& a) {
  if (std::isnan(s) || std::isinf(s)) {
    throw Error(ErrorCode::kInvalidArgument, "ExtReal scaling by a non-finite factor");
  }
  if (a.is_finite()) return ExtReal::from_double(s * a.value_);
  if (s == 0.0) return ExtReal(0.0);
  return s > 0 ? a : -a;
}

ExtReal operator/(const ExtReal& a, double s) {
  if (s == 0.0) throw Error(ErrorCode::kInvalidArgument, "ExtReal division by zero");
  return (1.0 / s) * a;
}

std::strong_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
  auto rank = [](const ExtReal& x) {
    return x.is_minus_inf() ? 0 : (x.is_finite() ? 1 : 2);
  };
  const int ra = rank(a);
  const int rb = rank(b);
  if (ra != rb || ra != 1) return ra <=> rb;
  if (a.value_ < b.value_) return std::strong_ordering::less;
  if (a.value_ > b.value_) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string ExtReal::str() const {
  if (is_plus_inf()) return "+inf";
  if (is_minus_inf()) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const ExtReal& x) { return os << x.str(); }

}  // namespace protodiff
