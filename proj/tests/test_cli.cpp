#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "protodiff/cli.hpp"
#include "protodiff/problem_io.hpp"

using namespace protodiff;
using protodiff::testing::error_code_of;
using nlohmann::json;

namespace {

std::string problem(const std::string& name) { return std::string(PROTODIFF_PROBLEMS) + "/" + name; }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "protodiff");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string parse_error_of(const json& j) {
  try {
    parse_problem(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    return e.what();
  }
  return "";
}

json base() {
  return json::parse(R"({
    "operator": {"kind": "identity", "dim": 1},
    "function": {"kind": "weighted_abs_1d", "a": {"kind": "poly", "coeffs": [1.0]},
                 "b": {"kind": "affine", "c0": 0.0, "c1": 1.0}},
    "path": {"kind": "constant", "value": [0.0]}})");
}

}  // namespace

TEST_CASE("every shipped problem round-trips field by field") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PROTODIFF_PROBLEMS)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    CAPTURE(entry.path().string());
    const ProblemSpec a = load_problem(entry.path().string());
    const ProblemSpec b = parse_problem(json::parse(to_json(a).dump()));
    CHECK(a == b);
    CHECK(to_json(a) == to_json(b));
    build_problem(b);
  }
  CHECK(count == 11);
}

TEST_CASE("problem equality sees single-field changes") {
  const ProblemSpec a = parse_problem(base());
  ProblemSpec b = a;
  CHECK(a == b);
  b.function.b.coeffs[1] = 2.0;
  CHECK_FALSE(a == b);
  b = a;
  b.t_max = 0.5;
  CHECK_FALSE(a == b);
  b = a;
  b.path.kind = "poly";
  CHECK_FALSE(a == b);
}

TEST_CASE("parse errors name the JSON path") {
  json j = base();
  j["function"]["a"]["coeffs"][0] = "one";
  CHECK(parse_error_of(j).find("$.function.a.coeffs[0]") != std::string::npos);

  j = base();
  j["function"].erase("b");
  CHECK(parse_error_of(j).find("$.function.b: missing") != std::string::npos);

  j = base();
  j["operator"]["kind"] = "nonlinear";
  CHECK(parse_error_of(j).find("$.operator.kind") != std::string::npos);

  j = base();
  j["path"]["value"] = json::array({0.0, 1.0});
  CHECK(parse_error_of(j).find("$.path") != std::string::npos);

  j = json::parse(R"({"operator": {"kind": "affine", "matrix": [[[1, 0], [0]]], "shift": [[0, 0]]}})");
  CHECK(parse_error_of(j).find("$.operator.matrix[0][1]") != std::string::npos);

  CHECK(error_code_of([] { load_problem("/nonexistent/problem.json"); }) == ErrorCode::kParseError);
}

TEST_CASE("derive reports the sensitivity as JSON") {
  const Run r = run({"derive", problem("weighted_abs.json")});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["y0"][0].get<double>() == doctest::Approx(2.0));
  CHECK(j["yprime"][0].get<double>() == doctest::Approx(1.0));
  for (const char* key : {"y0", "v0", "yprime", "hypotheses", "residuals"}) CHECK(j.contains(key));
  CHECK(j["hypotheses"].size() >= 5);
}

TEST_CASE("derive refuses the moving kink") {
  const Run r = run({"derive", problem("abs_moving_kink.json")});
  CHECK(r.code == 3);
  const json j = json::parse(r.out);
  CHECK(j["yprime"].is_null());
  CHECK(j["failure"].get<std::string>().rfind("(v)", 0) == 0);
}

TEST_CASE("validate exit codes") {
  CHECK(run({"validate", problem("weighted_abs.json")}).code == 0);
  CHECK(run({"validate", problem("halfspace_qp.json")}).code == 0);
  const Run kink = run({"validate", problem("abs_moving_kink.json")});
  CHECK(kink.code == 3);
  CHECK(json::parse(kink.out)["finite_differences"]["label"] == "oracle-only");
  // Two steps on the curved path y = (1 + 3t)/(1 + t) leave the oracle unsettled.
  const Run short_fd = run({"validate", problem("weighted_abs_regime_2.json"), "--fd-k", "1"});
  CHECK(short_fd.code == 2);
  CHECK(json::parse(short_fd.out)["verdict"] == "MISMATCH");
}

TEST_CASE("solve prints y(T)") {
  const Run r = run({"solve", "--at", "0", problem("halfspace_qp.json")});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["y"][0].get<double>() == doctest::Approx(0.5));
  CHECK(j["y"][1].get<double>() == doctest::Approx(0.5));
  const json k = json::parse(run({"solve", "--at", "0.5", problem("weighted_abs.json")}).out);
  CHECK(k["y"][0].get<double>() == doctest::Approx(2.5));
}

TEST_CASE("probe writes CSV") {
  const Run r = run({"probe", problem("abs_moving_kink.json"), "--x", "0", "--v", "0", "--w", "0.5,1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("w,tau,lower,upper,classification\n", 0) == 0);
  CHECK(r.out.find("DIVERGES_MINUS_INF") != std::string::npos);
  const Run c = run({"probe", "--csh", problem("abs_quadratic_kink.json")});
  CHECK(c.out.rfind("tau,z,xi,beta,family,found\n", 0) == 0);
}

TEST_CASE("CLI errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"derive"}).code == 1);
  CHECK(run({"derive", "/nonexistent.json"}).code == 1);
  const auto bad = std::filesystem::temp_directory_path() / "protodiff_bad_problem.json";
  std::ofstream(bad) << R"({"operator": {"kind": "identity", "dim": 1}})";
  const Run r = run({"derive", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("$.function: missing") != std::string::npos);
  std::filesystem::remove(bad);
}

TEST_CASE("output file and seed override") {
  const auto out = std::filesystem::temp_directory_path() / "protodiff_cli_out.json";
  CHECK(run({"derive", problem("smooth_only.json"), "--seed", "7", "-o", out.string()}).code == 0);
  std::ifstream in(out);
  const json j = json::parse(in);
  CHECK(j["yprime"].size() == 2);
  std::filesystem::remove(out);
}
