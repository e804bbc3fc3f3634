#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rydchain {

enum class ErrorKind {
  kInvalidParameter,
  kCoincidentAtoms,
  kSizeCapExceeded,
  kUnsupportedGraph,
  kDimensionOverflow,
  kLengthMismatch,
  kConvergenceFailure,
  kStepRejection,
  kEmptyWindow,
  kDegenerateDistribution,
  kFitFailure,
  kInsufficientData,
  kWindowTooShort,
  kInsufficientPoints,
  kNonpositiveValue,
  kInvalidNoise,
  kInvalidDt,
  kNoConvergence,
  kTruncationOverflow,
  kConfigParse,
  kValidation,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so
/// that front ends can map it onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rydchain
