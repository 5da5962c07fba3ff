// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mhop {

enum class ErrorKind {
  file_not_found,
  malformed_syntax,
  missing_required_field,
  io_failure,
  degenerate_chain,
  duplicate_case_id,
  precondition_violation,
  invalid_template,
  invalid_config,
  endpoint_unreachable,
  http_error,
  timeout,
  retries_exhausted,
  empty_completion,
  malformed_log,
  missing_variant_file,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::file_not_found: return "file-not-found";
    case ErrorKind::malformed_syntax: return "malformed-syntax";
    case ErrorKind::missing_required_field: return "missing-required-field";
    case ErrorKind::io_failure: return "io-failure";
    case ErrorKind::degenerate_chain: return "degenerate-chain";
    case ErrorKind::duplicate_case_id: return "duplicate-case-id";
    case ErrorKind::precondition_violation: return "precondition-violation";
    case ErrorKind::invalid_template: return "invalid-template";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::endpoint_unreachable: return "endpoint-unreachable";
    case ErrorKind::http_error: return "http-error";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::retries_exhausted: return "retries-exhausted";
    case ErrorKind::empty_completion: return "empty-completion";
    case ErrorKind::malformed_log: return "malformed-log";
    case ErrorKind::missing_variant_file: return "missing-variant-file";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  Error(ErrorKind kind, const std::string& message, int http_status)
      : Error(kind, message) {
    http_status_ = http_status;
  }

  ErrorKind kind() const noexcept { return kind_; }

  /// Set only for http-error (and retries-exhausted when the last attempt got a response).
  std::optional<int> http_status() const noexcept { return http_status_; }

 private:
  ErrorKind kind_;
  std::optional<int> http_status_;
};

}  // namespace mhop
