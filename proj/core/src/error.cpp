#include "phdiff/error.hpp"

#include <sstream>

namespace phdiff {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotSkew: return "NotSkew";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotPSD: return "NotPSD";
    case ErrorCode::kNotPD: return "NotPD";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kStepFailure: return "StepFailure";
    case ErrorCode::kHessianUnavailable: return "HessianUnavailable";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kInsufficientEnsemble: return "InsufficientEnsemble";
    case ErrorCode::kAmbiguousMinima: return "AmbiguousMinima";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {

std::string describe(const std::vector<StructureViolation>& violations) {
  std::ostringstream out;
  out << violations.size() << " structural invariant(s) violated";
  for (const auto& v : violations) {
    out << "; " << to_string(v.code) << " (" << v.what << ", residual " << v.residual
        << ", tolerance " << v.tolerance << ")";
  }
  return out.str();
}

ErrorCode first_code(const std::vector<StructureViolation>& violations) {
  return violations.empty() ? ErrorCode::kInvalidArgument : violations.front().code;
}

}  // namespace

StructureError::StructureError(std::vector<StructureViolation> violations)
    : Error(first_code(violations), describe(violations)), violations_(std::move(violations)) {}

bool StructureError::has(ErrorCode code) const noexcept {
  for (const auto& v : violations_) {
    if (v.code == code) return true;
  }
  return false;
}

NonFiniteStateError::NonFiniteStateError(std::size_t step, double time, std::size_t trajectory)
    : Error(ErrorCode::kNonFiniteState,
            "state became non-finite at step " + std::to_string(step) + " (t=" +
                std::to_string(time) + ")" +
                (trajectory == kNoTrajectory ? std::string()
                                             : " in trajectory " + std::to_string(trajectory))),
      step_(step),
      time_(time),
      trajectory_(trajectory) {}

void require_dim(std::string_view what, long actual, long expected) {
  if (actual != expected) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has dimension " +
                                                   std::to_string(actual) + ", expected " +
                                                   std::to_string(expected));
  }
}

}  // namespace phdiff
