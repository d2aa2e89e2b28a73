#pragma once

#include <compare>
#include <iosfwd>
#include <string>

namespace protodiff {

// A value of the extended real line [-inf, +inf]. Sums of opposite
// infinities are rejected rather than silently producing NaN.
class ExtReal {
 public:
  enum class Kind { kFinite, kPlusInf, kMinusInf };

  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT: implicit from double

  static constexpr ExtReal plus_inf() { return ExtReal(Kind::kPlusInf); }
  static constexpr ExtReal minus_inf() { return ExtReal(Kind::kMinusInf); }
  // Maps IEEE infinities to the flags; NaN is rejected.
  static ExtReal from_double(double v);

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::kFinite; }
  constexpr bool is_plus_inf() const { return kind_ == Kind::kPlusInf; }
  constexpr bool is_minus_inf() const { return kind_ == Kind::kMinusInf; }

  // Finite value; throws for the infinite flags.
  double value() const;
  // IEEE view: infinities become +/-HUGE_VAL.
  double to_double() const;

  ExtReal operator-() const;
  friend ExtReal operator+(const ExtReal& a, const ExtReal& b);
  friend ExtReal operator-(const ExtReal& a, const ExtReal& b) { return a + (-b); }
  // Scaling by a finite real; 0 * inf is defined as 0 (convex-analysis convention).
  friend ExtReal operator*(double s, const ExtReal& a);
  friend ExtReal operator*(const ExtReal& a, double s) { return s * a; }
  friend ExtReal operator/(const ExtReal& a, double s);

  friend std::strong_ordering operator<=>(const ExtReal& a, const ExtReal& b);
  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

  std::string str() const;

 private:
  explicit constexpr ExtReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::kFinite;
  double value_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const ExtReal& x);

}  // namespace protodiff
