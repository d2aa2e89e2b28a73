#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "protodiff/catalog.hpp"
#include "protodiff/problem.hpp"
#include "protodiff/validation.hpp"

namespace protodiff {

// Serializable problem description. Paths keep their input kind so files
// re-serialize in the same shape.
struct ScalarPathSpec {
  std::string kind = "poly";  // poly | affine | constant
  ScalarPoly coeffs;
};

struct VectorPathSpec {
  std::string kind = "poly";  // poly | affine | constant
  VectorPoly coeffs;
};

struct OperatorSpec {
  std::string kind = "identity";  // identity | affine
  int dim = 0;
  MatrixPoly matrix;
  VectorPoly shift;
  std::optional<double> lipschitz;
  std::optional<double> strong_monotonicity;
};

struct ConstraintSpec {
  Matrix P;
  VectorPoly r;
  ScalarPoly s;
};

struct FunctionSpec {
  std::string kind = "zero";  // zero | smooth_quadratic | weighted_abs_1d | constraint_indicator
  int dim = 0;
  MatrixPoly P;
  VectorPoly q;
  ScalarPoly r;
  ScalarPathSpec a;
  ScalarPathSpec b;
  std::vector<ConstraintSpec> constraints;
};

struct ProblemSpec {
  std::string description;
  OperatorSpec op;
  FunctionSpec function;
  VectorPathSpec path;
  double t_max = kDefaultTMax;
};

bool operator==(const ProblemSpec& a, const ProblemSpec& b);

// PARSE_ERROR naming the JSON path of the offending key, e.g. $.function.a.coeffs[1].
ProblemSpec parse_problem(const nlohmann::json& j);
ProblemSpec load_problem(const std::string& path);
nlohmann::json to_json(const ProblemSpec& spec);

VIProblem build_problem(const ProblemSpec& spec, std::uint64_t seed = kDefaultSeed);

nlohmann::json to_json(const SensitivityReport& report);
nlohmann::json to_json(const VerifyReport& report);

}  // namespace protodiff
