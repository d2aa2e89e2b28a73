#pragma once

#include <functional>
#include <optional>

#include "protodiff/types.hpp"

namespace protodiff {

// One-sided derivatives at t = 0 from forward differences with one Richardson
// step. Exact for polynomials of degree <= 3 (first) / <= 4 (second).
double forward_first_derivative(const std::function<double(double)>& f, double h = 1e-3);
double forward_second_derivative(const std::function<double(double)>& f, double h = 5e-3);

// t -> real on [0, t_max], with optional analytic derivatives at t = 0 that
// are spot-checked against forward differences when the path is built.
class ScalarPath {
 public:
  using Fn = std::function<double(double)>;

  ScalarPath(Fn eval, std::optional<double> d0 = std::nullopt,
             std::optional<double> dd0 = std::nullopt, double t_max = kDefaultTMax);

  static ScalarPath constant(double c, double t_max = kDefaultTMax);

  double operator()(double t) const;
  double t_max() const { return t_max_; }
  const std::optional<double>& d0() const { return d0_; }
  const std::optional<double>& dd0() const { return dd0_; }

  // Analytic value when supplied, forward-difference estimate otherwise.
  double derivative_at_zero() const;
  double second_derivative_at_zero() const;

 private:
  Fn eval_;
  std::optional<double> d0_;
  std::optional<double> dd0_;
  double t_max_;
};

class VectorPath {
 public:
  using Fn = std::function<Vector(double)>;

  VectorPath(int dim, Fn eval, std::optional<Vector> d0 = std::nullopt,
             double t_max = kDefaultTMax);

  static VectorPath constant(const Vector& c, double t_max = kDefaultTMax);

  int dim() const { return dim_; }
  Vector operator()(double t) const;
  double t_max() const { return t_max_; }
  const std::optional<Vector>& d0() const { return d0_; }
  Vector derivative_at_zero() const;

 private:
  int dim_;
  Fn eval_;
  std::optional<Vector> d0_;
  double t_max_;
};

}  // namespace protodiff
