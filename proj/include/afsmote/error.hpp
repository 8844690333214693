#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace afsmote {

enum class ErrorCode {
  // dataset
  kMissingColumn,
  kNonNumericCell,
  kEmptyFile,
  kNaNPolicyViolation,
  kTooFewPositives,
  kNonPositiveDefiniteCovariance,
  kIo,
  // samplers
  kKTooLarge,
  kTooFewMinority,
  // models
  kSingleClassInput,
  kDivergenceDetected,
  kDimensionMismatch,
  // filter
  kTooFewSamples,
  kEmptyHoldout,
  // calibration
  kUnfittedMap,
  // evaluation
  kDegenerateStatistic,
  // configuration / cli
  kInvalidArgument,
  kUnknownConfigKey,
};

/// Broad class of an error, used to pick the process exit code.
enum class ErrorKind { kUsage, kData, kRuntime };

std::string_view to_string(ErrorCode code);
ErrorKind kind_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// Same code, message prefixed with `context` (for example "fold 2").
  Error with_context(const std::string& context) const { return Error(code_, context + ": " + detail_); }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace afsmote
