#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phdiff {

enum class ErrorCode {
  kDimensionMismatch,
  kNotSkew,
  kNotSymmetric,
  kNotPSD,
  kNotPD,
  kNonFiniteState,
  kStepFailure,
  kHessianUnavailable,
  kEmptyEnsemble,
  kInsufficientEnsemble,
  kAmbiguousMinima,
  kInvalidArgument,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// One violated structural invariant together with the measured residual.
struct StructureViolation {
  ErrorCode code;
  std::string what;
  double residual;
  double tolerance;
};

// Raised by validate_structure; lists every violated invariant, not just the first.
class StructureError : public Error {
 public:
  explicit StructureError(std::vector<StructureViolation> violations);

  const std::vector<StructureViolation>& violations() const noexcept { return violations_; }
  bool has(ErrorCode code) const noexcept;

 private:
  std::vector<StructureViolation> violations_;
};

class NonFiniteStateError : public Error {
 public:
  static constexpr std::size_t kNoTrajectory = static_cast<std::size_t>(-1);

  NonFiniteStateError(std::size_t step, double time, std::size_t trajectory = kNoTrajectory);

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }
  std::size_t trajectory() const noexcept { return trajectory_; }

 private:
  std::size_t step_;
  double time_;
  std::size_t trajectory_;
};

// Throws kDimensionMismatch with a message naming `what` when actual != expected.
void require_dim(std::string_view what, long actual, long expected);

}  // namespace phdiff
