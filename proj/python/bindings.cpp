#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "protodiff/epi.hpp"
#include "protodiff/error.hpp"
#include "protodiff/problem_io.hpp"
#include "protodiff/validation.hpp"

namespace py = pybind11;
using namespace protodiff;

namespace {

VIProblem problem_from(const std::string& text, std::uint64_t seed) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return build_problem(parse_problem(j), seed);
}

SolverParams params(double tol, int max_iter, std::uint64_t seed) {
  SolverParams sp;
  sp.tol = tol;
  sp.max_iter = max_iter;
  sp.seed = seed;
  return sp;
}

ParamFunction weighted_abs(const ScalarPoly& a, const ScalarPoly& b) {
  return ParamFunction::weighted_abs(poly_path(a), poly_path(b));
}

double as_double(const ExtReal& e) { return e.to_double(); }

}  // namespace

PYBIND11_MODULE(_protodiff, m) {
  m.doc() = "Sensitivity of parametric variational inequalities of the second kind";

  py::register_exception<Error>(m, "ProtodiffError", PyExc_RuntimeError);

  m.def("normalize_problem", [](const std::string& text) {
    return to_json(parse_problem(nlohmann::json::parse(text))).dump();
  }, py::arg("problem_json"));

  m.def("solve", [](const std::string& text, double t, double tol, int max_iter, std::uint64_t seed) {
    const Vector y = solve_vi_at_t(problem_from(text, seed), t, params(tol, max_iter, seed));
    return std::vector<double>(y.data(), y.data() + y.size());
  }, py::arg("problem_json"), py::arg("t") = 0.0, py::arg("tol") = 1e-10, py::arg("max_iter") = 100000,
        py::arg("seed") = kDefaultSeed);

  m.def("derive", [](const std::string& text, double tol, int max_iter, std::uint64_t seed) {
    return to_json(analyze_sensitivity(problem_from(text, seed), params(tol, max_iter, seed))).dump();
  }, py::arg("problem_json"), py::arg("tol") = 1e-10, py::arg("max_iter") = 100000, py::arg("seed") = kDefaultSeed);

  m.def("validate", [](const std::string& text, double fd_h, int fd_k, double verify_tol, std::uint64_t seed) {
    const SolverParams sp = params(1e-10, 100000, seed);
    return to_json(verify_theorem(problem_from(text, seed), sp, FDSchedule{fd_h, fd_k}, verify_tol)).dump();
  }, py::arg("problem_json"), py::arg("fd_h") = 0.1, py::arg("fd_k") = 10, py::arg("verify_tol") = 1e-4,
        py::arg("seed") = kDefaultSeed);

  m.def("second_epi_derivative", [](const ScalarPoly& a, const ScalarPoly& b, double x, double v,
                                    const std::vector<double>& w) {
    const DerivedSecondOrder d = d2e_closed_form(weighted_abs(a, b), Vector::Constant(1, x), Vector::Constant(1, v));
    std::vector<double> out;
    for (double wi : w) out.push_back(as_double(d(Vector::Constant(1, wi))));
    return py::make_tuple(std::string(d.kind_name()), out);
  }, py::arg("a"), py::arg("b"), py::arg("x"), py::arg("v"), py::arg("w"));

  m.def("epi_probe", [](const ScalarPoly& a, const ScalarPoly& b, double x, double v, double w) {
    const EpiProbeEntry e = epi_limit_probe(weighted_abs(a, b), Vector::Constant(1, x), Vector::Constant(1, v),
                                            Vector::Constant(1, w));
    const auto lim = e.limit();
    return py::make_tuple(std::string(to_string(e.classification)),
                          lim ? *lim : std::numeric_limits<double>::quiet_NaN());
  }, py::arg("a"), py::arg("b"), py::arg("x"), py::arg("v"), py::arg("w"));

  m.def("csh_probe", [](const ScalarPoly& a, const ScalarPoly& b, double x, double v) {
    const CshReport r = csh_probe(weighted_abs(a, b), Vector::Constant(1, x), Vector::Constant(1, v));
    py::object limit = py::none();
    if (r.limit) limit = py::make_tuple(r.limit->z, r.limit->xi, r.limit->beta);
    return py::make_tuple(std::string(to_string(r.found)), limit);
  }, py::arg("a"), py::arg("b"), py::arg("x"), py::arg("v"));

  m.def("phi_gap", [](const ScalarPoly& a, const ScalarPoly& b, double x, double v, const std::vector<double>& t) {
    const PhiReport r = phi_gap(weighted_abs(a, b), x, v, t);
    py::dict d;
    d["t"] = r.t;
    d["phi"] = r.phi;
    d["d1"] = r.d1;
    d["d2"] = r.d2;
    d["stationary"] = r.stationary;
    d["nonnegative"] = r.nonnegative;
    return d;
  }, py::arg("a"), py::arg("b"), py::arg("x"), py::arg("v"), py::arg("t"));
}
