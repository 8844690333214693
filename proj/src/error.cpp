#include "afsmote/error.hpp"

namespace afsmote {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kNaNPolicyViolation: return "NaNPolicyViolation";
    case ErrorCode::kTooFewPositives: return "TooFewPositives";
    case ErrorCode::kNonPositiveDefiniteCovariance: return "NonPositiveDefiniteCovariance";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kTooFewMinority: return "TooFewMinority";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kEmptyHoldout: return "EmptyHoldout";
    case ErrorCode::kUnfittedMap: return "UnfittedMap";
    case ErrorCode::kDegenerateStatistic: return "DegenerateStatistic";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownConfigKey: return "UnknownConfigKey";
  }
  return "Unknown";
}

ErrorKind kind_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownConfigKey:
      return ErrorKind::kUsage;
    case ErrorCode::kMissingColumn:
    case ErrorCode::kNonNumericCell:
    case ErrorCode::kEmptyFile:
    case ErrorCode::kNaNPolicyViolation:
    case ErrorCode::kTooFewPositives:
    case ErrorCode::kIo:
    case ErrorCode::kTooFewMinority:
    case ErrorCode::kSingleClassInput:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kTooFewSamples:
    case ErrorCode::kEmptyHoldout:
      return ErrorKind::kData;
    default:
      return ErrorKind::kRuntime;
  }
}

}  // namespace afsmote
