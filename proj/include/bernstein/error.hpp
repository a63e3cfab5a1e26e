#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bernstein {

enum class ErrorCode {
  domain,
  ordering,
  policy,
  unsupported_geometry,
  invalid_datum,
  underflow,
  root_isolation,
  positivity,
  kernel_integration,
  numerical_blowup,
  insufficient_path_data,
  degenerate_horizon,
  precondition,
  parse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::policy: return "policy";
    case ErrorCode::unsupported_geometry: return "unsupported-geometry";
    case ErrorCode::invalid_datum: return "invalid-datum";
    case ErrorCode::underflow: return "underflow";
    case ErrorCode::root_isolation: return "root-isolation";
    case ErrorCode::positivity: return "positivity";
    case ErrorCode::kernel_integration: return "kernel-integration";
    case ErrorCode::numerical_blowup: return "numerical-blowup";
    case ErrorCode::insufficient_path_data: return "insufficient-path-data";
    case ErrorCode::degenerate_horizon: return "degenerate-horizon";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

/// Single exception type for the library; the code tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace bernstein
