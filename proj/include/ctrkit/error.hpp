#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrkit {

/// Stable machine-readable error codes. The string form is part of the CLI
/// contract; do not rename existing entries.
enum class ErrorCode {
  InvalidArgument,
  DomainError,
  FitFailure,
  NoBracket,
  NumericFailure,
  Unreachable,
  DegenerateConfiguration,
  SizeMismatch,
  Io,
  Parse,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DomainError: return "domain_error";
    case ErrorCode::FitFailure: return "fit_failure";
    case ErrorCode::NoBracket: return "no_bracket";
    case ErrorCode::NumericFailure: return "numeric_failure";
    case ErrorCode::Unreachable: return "unreachable";
    case ErrorCode::DegenerateConfiguration: return "degenerate_configuration";
    case ErrorCode::SizeMismatch: return "size_mismatch";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Config: return "config_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctrkit
