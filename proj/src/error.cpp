#include "protodiff/error.hpp"

namespace protodiff {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kAuditFailed: return "AUDIT_FAILED";
    case ErrorCode::kMissingProxOracle: return "MISSING_PROX_ORACLE";
    case ErrorCode::kPathCheckFailed: return "PATH_CHECK_FAILED";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kSubproblemDiverged: return "SUBPROBLEM_DIVERGED";
    case ErrorCode::kOracleInconsistent: return "ORACLE_INCONSISTENT";
    case ErrorCode::kInfeasibleSet: return "INFEASIBLE_SET";
    case ErrorCode::kMaxIterExceeded: return "MAX_ITER_EXCEEDED";
    case ErrorCode::kPostconditionFailed: return "POSTCONDITION_FAILED";
    case ErrorCode::kXNotInDomain: return "X_NOT_IN_DOMAIN";
    case ErrorCode::kDimensionTooLarge: return "DIMENSION_TOO_LARGE";
    case ErrorCode::kUnsupportedVariant: return "UNSUPPORTED_VARIANT";
    case ErrorCode::kHypothesisViolated: return "HYPOTHESIS_VIOLATED";
    case ErrorCode::kSubgradientInvalid: return "SUBGRADIENT_INVALID";
    case ErrorCode::kInfeasiblePoint: return "INFEASIBLE_POINT";
    case ErrorCode::kEmptyY: return "EMPTY_Y";
    case ErrorCode::kUnboundedY: return "UNBOUNDED_Y";
    case ErrorCode::kNotSemidifferentiable: return "NOT_SEMIDIFFERENTIABLE";
    case ErrorCode::kQpInfeasible: return "QP_INFEASIBLE";
    case ErrorCode::kQpUnbounded: return "QP_UNBOUNDED";
    case ErrorCode::kNoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::kConjugateInfinite: return "CONJUGATE_INFINITE";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kIndeterminateForm: return "INDETERMINATE_FORM";
  }
  return "UNKNOWN";
}

}  // namespace protodiff
