#pragma once

#include <cstdint>

#include "protodiff/param_function.hpp"
#include "protodiff/param_operator.hpp"
#include "protodiff/paths.hpp"

namespace protodiff {

// Find y with <A(t,y), z-y> + f(t,z) - f(t,y) >= <x(t), z-y> for all z.
struct VIProblem {
  ParamOperator A;
  ParamFunction f;
  VectorPath x;

  int dim() const { return A.dim(); }
  double t_max() const { return x.t_max(); }
};

// Checks dimensions and runs the operator and function audits. For
// constraint indicators, C(t) is additionally checked to be nonempty on a
// t-grid by projecting the origin.
VIProblem build_problem(ParamOperator A, ParamFunction f, VectorPath x,
                        std::uint64_t seed = kDefaultSeed);

}  // namespace protodiff
