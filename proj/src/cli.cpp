#include "protodiff/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "protodiff/epi.hpp"
#include "protodiff/error.hpp"
#include "protodiff/problem_io.hpp"

namespace protodiff {
namespace {

constexpr int kExitError = 1;
constexpr int kExitMismatch = 2;
constexpr int kExitHypothesis = 3;

struct Options {
  std::string input;
  std::string output;
  std::uint64_t seed = kDefaultSeed;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> rho;
  double at = 0.0;
  double fd_h = 0.1;
  int fd_k = 10;
  double verify_tol = 1e-4;
  std::vector<double> w;
  std::optional<double> x;
  std::optional<double> v;
  bool csh = false;
};

SolverParams solver_params(const Options& o) {
  SolverParams sp;
  if (o.tol) sp.tol = *o.tol;
  if (o.max_iter) sp.max_iter = *o.max_iter;
  sp.rho = o.rho;
  sp.seed = o.seed;
  return sp;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.output);
  if (!f) throw Error(ErrorCode::kParseError, "cannot write " + o.output);
  f << text;
}

int cmd_solve(const Options& o, std::ostream& out) {
  const VIProblem p = build_problem(load_problem(o.input), o.seed);
  const ViSolution s = solve_vi_detailed(p, o.at, solver_params(o));
  nlohmann::json j;
  j["t"] = o.at;
  j["y"] = std::vector<double>(s.y.data(), s.y.data() + s.y.size());
  j["iterations"] = s.iterations;
  j["closed_form"] = s.closed_form;
  emit(o, j.dump(2) + "\n", out);
  return 0;
}

int cmd_derive(const Options& o, std::ostream& out) {
  const VIProblem p = build_problem(load_problem(o.input), o.seed);
  const SensitivityReport r = analyze_sensitivity(p, solver_params(o));
  emit(o, to_json(r).dump(2) + "\n", out);
  return r.ok() ? 0 : kExitHypothesis;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const VIProblem p = build_problem(load_problem(o.input), o.seed);
  const VerifyReport r = verify_theorem(p, solver_params(o), FDSchedule{o.fd_h, o.fd_k}, o.verify_tol);
  emit(o, to_json(r).dump(2) + "\n", out);
  switch (r.verdict) {
    case Verdict::kPass:
      return 0;
    case Verdict::kMismatch:
      return kExitMismatch;
    case Verdict::kHypothesisViolated:
      return kExitHypothesis;
  }
  return kExitError;
}

int cmd_probe(const Options& o, std::ostream& out) {
  const VIProblem p = build_problem(load_problem(o.input), o.seed);
  Vector x;
  Vector v;
  if (o.x && o.v) {
    x = Vector::Constant(1, *o.x);
    v = Vector::Constant(1, *o.v);
  } else {
    x = solve_vi_at_t(p, 0.0, solver_params(o));
    v = p.x(0.0) - p.A(0.0, x);
  }
  if (x.size() != 1) throw Error(ErrorCode::kDimensionTooLarge, "probe works on 1-D problems");
  if (o.csh) {
    emit(o, csh_csv(csh_probe(p.f, x, v)), out);
    return 0;
  }
  std::vector<EpiProbeEntry> entries;
  for (double w : o.w) entries.push_back(epi_limit_probe(p.f, x, v, Vector::Constant(1, w)));
  emit(o, epi_probe_csv(entries), out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensitivity of parametric variational inequalities of the second kind"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("input", o.input, "Problem JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", o.output, "Write the result here instead of stdout");
    sub->add_option("--seed", o.seed, "Seed for audits and probes")->envname("PROTODIFF_SEED");
    sub->add_option("--tol", o.tol, "Solver tolerance");
    sub->add_option("--max-iter", o.max_iter, "Solver iteration cap");
    sub->add_option("--rho", o.rho, "Forward-backward step");
  };

  CLI::App* solve = app.add_subcommand("solve", "Print the solution y(T)");
  common(solve);
  solve->add_option("--at", o.at, "Parameter value T")->required()->check(CLI::NonNegativeNumber);

  CLI::App* derive = app.add_subcommand("derive", "Print the sensitivity report as JSON");
  common(derive);

  CLI::App* validate = app.add_subcommand("validate", "Compare y'(0) with finite differences");
  common(validate);
  validate->add_option("--fd-h", o.fd_h, "First finite-difference step")->check(CLI::PositiveNumber);
  validate->add_option("--fd-k", o.fd_k, "Number of step halvings")->check(CLI::Range(1, 40));
  validate->add_option("--verify-tol", o.verify_tol, "Agreement tolerance")->check(CLI::NonNegativeNumber);

  CLI::App* probe = app.add_subcommand("probe", "Epi-limit or supporting-hyperplane probe as CSV");
  common(probe);
  o.w = {-0.5, 0.0, 0.5, 1.0, 1.5, 2.5};
  probe->add_option("--w", o.w, "Probe directions")->delimiter(',');
  probe->add_option("--x", o.x, "Base point (default y(0))");
  probe->add_option("--v", o.v, "Subgradient (default x(0) - A(0, y(0)))");
  probe->add_flag("--csh", o.csh, "Run the supporting-hyperplane probe instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (solve->parsed()) return cmd_solve(o, out);
    if (derive->parsed()) return cmd_derive(o, out);
    if (validate->parsed()) return cmd_validate(o, out);
    return cmd_probe(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace protodiff
