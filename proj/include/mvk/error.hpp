#pragma once

#include <stdexcept>
#include <string>

namespace mvk {

enum class ErrorCode {
  InvalidArgument,
  InvalidIndexSet,
  DriftDiverged,
  SingularMap,
  InsufficientSamples,
  EmptyInput,
  SingularCovariance,
  NoValidView,
  DegenerateDataset,
  SpectralFailure,
  NonPositiveEigenvalue,
  ShapeMismatch,
  MissingGroundTruth,
  DegenerateFit,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mvk
