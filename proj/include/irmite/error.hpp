#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace irmite {

enum class ErrorCode {
  InvalidArg,
  DimensionMismatch,
  LengthMismatch,
  EmptyInput,
  SingularInput,
  NotPSD,
  NotPD,
  EmptyDomainGroup,
  NonFinite,
  MissingOracle,
  SchemaError,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArg: return "InvalidArg";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SingularInput: return "SingularInput";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotPD: return "NotPD";
    case ErrorCode::EmptyDomainGroup: return "EmptyDomainGroup";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingOracle: return "MissingOracle";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// All library failures are reported through this type; code() identifies the
// failure class so callers can decide whether to redraw, skip or abort.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace irmite
