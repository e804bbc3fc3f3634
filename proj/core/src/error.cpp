#include "rydchain/error.hpp"

namespace rydchain {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kCoincidentAtoms: return "coincident-atoms";
    case ErrorKind::kSizeCapExceeded: return "size-cap-exceeded";
    case ErrorKind::kUnsupportedGraph: return "unsupported-graph";
    case ErrorKind::kDimensionOverflow: return "dimension-overflow";
    case ErrorKind::kLengthMismatch: return "length-mismatch";
    case ErrorKind::kConvergenceFailure: return "convergence-failure";
    case ErrorKind::kStepRejection: return "step-rejection";
    case ErrorKind::kEmptyWindow: return "empty-window";
    case ErrorKind::kDegenerateDistribution: return "degenerate-distribution";
    case ErrorKind::kFitFailure: return "fit-failure";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kWindowTooShort: return "window-too-short";
    case ErrorKind::kInsufficientPoints: return "insufficient-points";
    case ErrorKind::kNonpositiveValue: return "nonpositive-value";
    case ErrorKind::kInvalidNoise: return "invalid-noise";
    case ErrorKind::kInvalidDt: return "invalid-dt";
    case ErrorKind::kNoConvergence: return "no-convergence";
    case ErrorKind::kTruncationOverflow: return "truncation-overflow";
    case ErrorKind::kConfigParse: return "config-parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace rydchain
