#include "protodiff/problem.hpp"

#include <sstream>

#include "protodiff/error.hpp"
#include "protodiff/prox.hpp"

namespace protodiff {

VIProblem build_problem(ParamOperator A, ParamFunction f, VectorPath x, std::uint64_t seed) {
  if (A.dim() != f.dim() || A.dim() != x.dim()) {
    std::ostringstream os;
    os << "operator dim " << A.dim() << ", function dim " << f.dim() << ", path dim " << x.dim();
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
  const double t_max = x.t_max();
  audit_operator(A, t_max, seed);
  if (const auto* c = f.get_if<CustomFunction>(); c && !c->prox) {
    throw Error(ErrorCode::kMissingProxOracle, "custom function supplied without a prox oracle");
  }
  audit_function(f, t_max, seed);
  if (f.get_if<ConstraintIndicator>()) {
    for (int k = 0; k <= 8; ++k) {
      const double t = t_max * k / 8.0;
      try {
        moreau_prox(f, t, Vector::Zero(f.dim()), 1.0);
      } catch (const Error& e) {
        std::ostringstream os;
        os << "constraint set C(t) at t=" << t << " failed the properness check: " << e.what();
        throw Error(ErrorCode::kAuditFailed, os.str());
      }
    }
  }
  return VIProblem{std::move(A), std::move(f), std::move(x)};
}

}  // namespace protodiff
