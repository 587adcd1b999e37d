#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergocam {

enum class ErrorCode {
  kValidation,
  kDegenerateProjection,
  kInsufficientViews,
  kDegenerateGeometry,
  kPointAtInfinity,
  kUncoveredLandmark,
  kInconsistentEstimates,
  kStaleSolver,
  kIncompleteFrame,
  kInsufficientData,
  kSingleAdaptationViolation,
  kPairing,
  kIo,
};

/// Every failure raised by the library carries a code so that callers (and
/// the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kDegenerateProjection: return "degenerate-projection";
    case ErrorCode::kInsufficientViews: return "insufficient-views";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kPointAtInfinity: return "point-at-infinity";
    case ErrorCode::kUncoveredLandmark: return "uncovered-landmark";
    case ErrorCode::kInconsistentEstimates: return "inconsistent-estimates";
    case ErrorCode::kStaleSolver: return "stale-solver";
    case ErrorCode::kIncompleteFrame: return "incomplete-frame";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kSingleAdaptationViolation: return "single-adaptation-violation";
    case ErrorCode::kPairing: return "pairing";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace ergocam
