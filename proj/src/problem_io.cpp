#include "protodiff/problem_io.hpp"

#include <fstream>

#include "protodiff/error.hpp"

namespace protodiff {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& at, const std::string& what) {
  throw Error(ErrorCode::kParseError, at + ": " + what);
}

const json& field(const json& j, const std::string& at, const char* key) {
  if (!j.is_object()) fail(at, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(at + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& at) {
  if (!j.is_number()) fail(at, "expected a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& at) {
  if (!j.is_string()) fail(at, "expected a string");
  return j.get<std::string>();
}

const json& array(const json& j, const std::string& at) {
  if (!j.is_array()) fail(at, "expected an array");
  return j;
}

std::string index(const std::string& at, std::size_t i) { return at + "[" + std::to_string(i) + "]"; }

Vector vector_of(const json& j, const std::string& at) {
  array(j, at);
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], index(at, i));
  return v;
}

Matrix matrix_of(const json& j, const std::string& at) {
  array(j, at);
  if (j.empty()) fail(at, "empty matrix");
  const Vector first = vector_of(j[0], index(at, 0));
  Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_of(j[i], index(at, i));
    if (row.size() != first.size()) fail(index(at, i), "ragged matrix row");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

ScalarPoly scalar_poly(const json& j, const std::string& at) {
  array(j, at);
  if (j.empty()) fail(at, "empty coefficient list");
  ScalarPoly out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(at, i)));
  return out;
}

VectorPoly vector_poly(const json& j, const std::string& at) {
  array(j, at);
  if (j.empty()) fail(at, "empty coefficient list");
  VectorPoly out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(vector_of(j[i], index(at, i)));
    if (out.back().size() != out.front().size()) fail(index(at, i), "dimension differs from the first coefficient");
  }
  return out;
}

MatrixPoly matrix_poly(const json& j, const std::string& at) {
  array(j, at);
  if (j.empty()) fail(at, "empty coefficient list");
  MatrixPoly out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(matrix_of(j[i], index(at, i)));
    if (out.back().rows() != out.front().rows() || out.back().cols() != out.front().cols()) {
      fail(index(at, i), "shape differs from the first coefficient");
    }
  }
  return out;
}

ScalarPathSpec scalar_path(const json& j, const std::string& at) {
  ScalarPathSpec s;
  s.kind = text(field(j, at, "kind"), at + ".kind");
  if (s.kind == "poly") {
    s.coeffs = scalar_poly(field(j, at, "coeffs"), at + ".coeffs");
  } else if (s.kind == "affine") {
    s.coeffs = {number(field(j, at, "c0"), at + ".c0"), number(field(j, at, "c1"), at + ".c1")};
  } else if (s.kind == "constant") {
    s.coeffs = {number(field(j, at, "value"), at + ".value")};
  } else {
    fail(at + ".kind", "unknown scalar path kind '" + s.kind + "'");
  }
  return s;
}

VectorPathSpec vector_path(const json& j, const std::string& at) {
  VectorPathSpec s;
  s.kind = text(field(j, at, "kind"), at + ".kind");
  if (s.kind == "poly") {
    s.coeffs = vector_poly(field(j, at, "coeffs"), at + ".coeffs");
  } else if (s.kind == "affine") {
    s.coeffs = {vector_of(field(j, at, "c0"), at + ".c0"), vector_of(field(j, at, "c1"), at + ".c1")};
    if (s.coeffs[0].size() != s.coeffs[1].size()) fail(at + ".c1", "dimension differs from c0");
  } else if (s.kind == "constant") {
    s.coeffs = {vector_of(field(j, at, "value"), at + ".value")};
  } else {
    fail(at + ".kind", "unknown vector path kind '" + s.kind + "'");
  }
  return s;
}

int positive_dim(const json& j, const std::string& at) {
  if (!j.is_number_integer() || j.get<int>() < 1) fail(at, "expected a positive integer");
  return j.get<int>();
}

OperatorSpec operator_spec(const json& j, const std::string& at) {
  OperatorSpec s;
  s.kind = text(field(j, at, "kind"), at + ".kind");
  if (s.kind == "identity") {
    s.dim = positive_dim(field(j, at, "dim"), at + ".dim");
  } else if (s.kind == "affine") {
    s.matrix = matrix_poly(field(j, at, "matrix"), at + ".matrix");
    s.dim = static_cast<int>(s.matrix.front().rows());
    if (s.matrix.front().cols() != s.dim) fail(at + ".matrix", "matrix must be square");
    s.shift = vector_poly(field(j, at, "shift"), at + ".shift");
    if (s.shift.front().size() != s.dim) fail(at + ".shift", "dimension differs from the matrix");
    if (j.contains("lipschitz")) s.lipschitz = number(j["lipschitz"], at + ".lipschitz");
    if (j.contains("strong_monotonicity")) {
      s.strong_monotonicity = number(j["strong_monotonicity"], at + ".strong_monotonicity");
    }
  } else {
    fail(at + ".kind", "unknown operator kind '" + s.kind + "'");
  }
  return s;
}

FunctionSpec function_spec(const json& j, const std::string& at) {
  FunctionSpec s;
  s.kind = text(field(j, at, "kind"), at + ".kind");
  if (s.kind == "zero") {
    s.dim = positive_dim(field(j, at, "dim"), at + ".dim");
  } else if (s.kind == "smooth_quadratic") {
    s.P = matrix_poly(field(j, at, "P"), at + ".P");
    s.dim = static_cast<int>(s.P.front().rows());
    if (s.P.front().cols() != s.dim) fail(at + ".P", "matrix must be square");
    s.q = vector_poly(field(j, at, "q"), at + ".q");
    if (s.q.front().size() != s.dim) fail(at + ".q", "dimension differs from P");
    s.r = scalar_poly(field(j, at, "r"), at + ".r");
  } else if (s.kind == "weighted_abs_1d") {
    s.dim = 1;
    s.a = scalar_path(field(j, at, "a"), at + ".a");
    s.b = scalar_path(field(j, at, "b"), at + ".b");
  } else if (s.kind == "constraint_indicator") {
    const std::string cat = at + ".constraints";
    const json& rows = array(field(j, at, "constraints"), cat);
    if (rows.empty()) fail(cat, "no constraints");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string rat = index(cat, i);
      ConstraintSpec c;
      c.P = matrix_of(field(rows[i], rat, "P"), rat + ".P");
      c.r = vector_poly(field(rows[i], rat, "r"), rat + ".r");
      c.s = scalar_poly(field(rows[i], rat, "s"), rat + ".s");
      if (i == 0) s.dim = static_cast<int>(c.P.rows());
      if (c.P.rows() != s.dim || c.P.cols() != s.dim) fail(rat + ".P", "shape differs from the problem dimension");
      if (c.r.front().size() != s.dim) fail(rat + ".r", "dimension differs from P");
      s.constraints.push_back(std::move(c));
    }
  } else {
    fail(at + ".kind", "unknown function kind '" + s.kind + "'");
  }
  return s;
}

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

json vpoly_json(const VectorPoly& p) {
  json out = json::array();
  for (const Vector& v : p) out.push_back(vec_json(v));
  return out;
}

json mpoly_json(const MatrixPoly& p) {
  json out = json::array();
  for (const Matrix& m : p) out.push_back(mat_json(m));
  return out;
}

json path_json(const ScalarPathSpec& s) {
  if (s.kind == "affine") return {{"kind", "affine"}, {"c0", s.coeffs.at(0)}, {"c1", s.coeffs.at(1)}};
  if (s.kind == "constant") return {{"kind", "constant"}, {"value", s.coeffs.at(0)}};
  return {{"kind", "poly"}, {"coeffs", s.coeffs}};
}

json path_json(const VectorPathSpec& s) {
  if (s.kind == "affine") return {{"kind", "affine"}, {"c0", vec_json(s.coeffs.at(0))}, {"c1", vec_json(s.coeffs.at(1))}};
  if (s.kind == "constant") return {{"kind", "constant"}, {"value", vec_json(s.coeffs.at(0))}};
  return {{"kind", "poly"}, {"coeffs", vpoly_json(s.coeffs)}};
}

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }
bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}
bool same(double a, double b) { return a == b; }
bool same(const ConstraintSpec& a, const ConstraintSpec& b);

template <class T>
bool same(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same(a[i], b[i])) return false;
  }
  return true;
}

bool same(const ScalarPathSpec& a, const ScalarPathSpec& b) { return a.kind == b.kind && same(a.coeffs, b.coeffs); }
bool same(const VectorPathSpec& a, const VectorPathSpec& b) { return a.kind == b.kind && same(a.coeffs, b.coeffs); }
bool same(const ConstraintSpec& a, const ConstraintSpec& b) {
  return same(a.P, b.P) && same(a.r, b.r) && same(a.s, b.s);
}

ScalarPath to_path(const ScalarPathSpec& s, double t_max) { return poly_path(s.coeffs, t_max); }

}  // namespace

bool operator==(const ProblemSpec& a, const ProblemSpec& b) {
  const OperatorSpec& oa = a.op;
  const OperatorSpec& ob = b.op;
  const FunctionSpec& fa = a.function;
  const FunctionSpec& fb = b.function;
  return a.description == b.description && a.t_max == b.t_max && same(a.path, b.path) && oa.kind == ob.kind &&
         oa.dim == ob.dim && same(oa.matrix, ob.matrix) && same(oa.shift, ob.shift) &&
         oa.lipschitz == ob.lipschitz && oa.strong_monotonicity == ob.strong_monotonicity && fa.kind == fb.kind &&
         fa.dim == fb.dim && same(fa.P, fb.P) && same(fa.q, fb.q) && same(fa.r, fb.r) && same(fa.a, fb.a) &&
         same(fa.b, fb.b) && same(fa.constraints, fb.constraints);
}

ProblemSpec parse_problem(const json& j) {
  const std::string at = "$";
  if (!j.is_object()) fail(at, "expected an object");
  ProblemSpec s;
  if (j.contains("description")) s.description = text(j["description"], "$.description");
  if (j.contains("t_max")) {
    s.t_max = number(j["t_max"], "$.t_max");
    if (!(s.t_max > 0.0)) fail("$.t_max", "must be positive");
  }
  s.op = operator_spec(field(j, at, "operator"), "$.operator");
  s.function = function_spec(field(j, at, "function"), "$.function");
  s.path = vector_path(field(j, at, "path"), "$.path");
  if (s.function.dim != s.op.dim) fail("$.function", "dimension differs from the operator");
  if (static_cast<int>(s.path.coeffs.front().size()) != s.op.dim) fail("$.path", "dimension differs from the operator");
  return s;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return parse_problem(j);
}

json to_json(const ProblemSpec& s) {
  json j;
  if (!s.description.empty()) j["description"] = s.description;
  j["t_max"] = s.t_max;
  json op{{"kind", s.op.kind}};
  if (s.op.kind == "identity") {
    op["dim"] = s.op.dim;
  } else {
    op["matrix"] = mpoly_json(s.op.matrix);
    op["shift"] = vpoly_json(s.op.shift);
    if (s.op.lipschitz) op["lipschitz"] = *s.op.lipschitz;
    if (s.op.strong_monotonicity) op["strong_monotonicity"] = *s.op.strong_monotonicity;
  }
  j["operator"] = op;
  const FunctionSpec& f = s.function;
  json fj{{"kind", f.kind}};
  if (f.kind == "zero") {
    fj["dim"] = f.dim;
  } else if (f.kind == "smooth_quadratic") {
    fj["P"] = mpoly_json(f.P);
    fj["q"] = vpoly_json(f.q);
    fj["r"] = f.r;
  } else if (f.kind == "weighted_abs_1d") {
    fj["a"] = path_json(f.a);
    fj["b"] = path_json(f.b);
  } else {
    json rows = json::array();
    for (const ConstraintSpec& c : f.constraints) rows.push_back({{"P", mat_json(c.P)}, {"r", vpoly_json(c.r)}, {"s", c.s}});
    fj["constraints"] = rows;
  }
  j["function"] = fj;
  j["path"] = path_json(s.path);
  return j;
}

VIProblem build_problem(const ProblemSpec& s, std::uint64_t seed) {
  const ParamOperator A = s.op.kind == "identity"
                              ? ParamOperator::identity(s.op.dim)
                              : affine_operator(s.op.matrix, s.op.shift, s.t_max, s.op.lipschitz,
                                                s.op.strong_monotonicity);
  const FunctionSpec& fs = s.function;
  std::optional<ParamFunction> f;
  if (fs.kind == "zero") {
    f = ParamFunction::zero(fs.dim);
  } else if (fs.kind == "smooth_quadratic") {
    f = smooth_quadratic(fs.P, fs.q, fs.r);
  } else if (fs.kind == "weighted_abs_1d") {
    f = ParamFunction::weighted_abs(to_path(fs.a, s.t_max), to_path(fs.b, s.t_max));
  } else {
    std::vector<QuadraticConstraint> rows;
    for (const ConstraintSpec& c : fs.constraints) rows.push_back({c.P, c.r, c.s});
    f = quadratic_constraints(rows);
  }
  return build_problem(A, *f, poly_path(s.path.coeffs, s.t_max), seed);
}

json to_json(const SensitivityReport& r) {
  json j;
  j["y0"] = vec_json(r.y0);
  j["v0"] = vec_json(r.v0);
  j["yprime"] = r.yprime ? vec_json(*r.yprime) : json(nullptr);
  j["x_prime"] = vec_json(r.x_prime);
  json hyp = json::array();
  for (const HypothesisCheck& h : r.hypotheses) {
    hyp.push_back({{"clause", h.clause}, {"name", h.name}, {"status", std::string(to_string(h.status))},
                   {"detail", h.detail}});
  }
  j["hypotheses"] = hyp;
  json res = json::object();
  for (const auto& [k, v] : r.residuals) res[k] = v;
  j["residuals"] = res;
  json dp = json::object();
  if (r.second_order) dp["second_epi_derivative"] = std::string(r.second_order->kind_name());
  if (r.semi) {
    dp["semi_derivative"] = r.semi->analytic() ? "analytic" : "richardson";
    if (r.semi->analytic()) {
      dp["J"] = mat_json(*r.semi->J);
      dp["s"] = vec_json(*r.semi->s);
    }
  }
  j["derivative_problem"] = dp;
  j["solver"] = {{"iterations", r.solver_iterations}, {"closed_form", r.closed_form_solve}, {"rho", r.rho}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

json to_json(const VerifyReport& r) {
  json j;
  j["verdict"] = std::string(to_string(r.verdict));
  j["difference"] = r.difference;
  j["tol"] = r.tol;
  j["detail"] = r.detail;
  if (r.sensitivity) j["sensitivity"] = to_json(*r.sensitivity);
  if (r.fd) {
    j["finite_differences"] = {{"estimate", vec_json(r.fd->estimate)},
                               {"error_estimate", r.fd->error_estimate},
                               {"label", "oracle-only"}};
  }
  return j;
}

}  // namespace protodiff
