#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biflab {

enum class ErrorKind {
  DegenerateParameter,
  RootFindingFailure,
  CriticalHit,
  UnusableGrid,
  EmptyMeasure,
  ResolutionExceeded,
  ZeroBallMass,
  InsufficientSamples,
  BoundaryZero,
  StaleInput,
  InvalidArgument,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateParameter: return "DegenerateParameter";
    case ErrorKind::RootFindingFailure: return "RootFindingFailure";
    case ErrorKind::CriticalHit: return "CriticalHit";
    case ErrorKind::UnusableGrid: return "UnusableGrid";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::ResolutionExceeded: return "ResolutionExceeded";
    case ErrorKind::ZeroBallMass: return "ZeroBallMass";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::BoundaryZero: return "BoundaryZero";
    case ErrorKind::StaleInput: return "StaleInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace biflab
