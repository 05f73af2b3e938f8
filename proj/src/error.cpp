#include "mvk/error.hpp"

namespace mvk {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidIndexSet: return "InvalidIndexSet";
    case ErrorCode::DriftDiverged: return "DriftDiverged";
    case ErrorCode::SingularMap: return "SingularMap";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NoValidView: return "NoValidView";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::SpectralFailure: return "SpectralFailure";
    case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mvk
