#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protodiff {

enum class ErrorCode {
  kDimensionMismatch,
  kAuditFailed,
  kMissingProxOracle,
  kPathCheckFailed,
  kInvalidArgument,
  kSubproblemDiverged,
  kOracleInconsistent,
  kInfeasibleSet,
  kMaxIterExceeded,
  kPostconditionFailed,
  kXNotInDomain,
  kDimensionTooLarge,
  kUnsupportedVariant,
  kHypothesisViolated,
  kSubgradientInvalid,
  kInfeasiblePoint,
  kEmptyY,
  kUnboundedY,
  kNotSemidifferentiable,
  kQpInfeasible,
  kQpUnbounded,
  kNoConvergence,
  kConjugateInfinite,
  kParseError,
  kIndeterminateForm,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` is the machine
// contract, `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace protodiff
