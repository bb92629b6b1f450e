#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sledge {

/// Stable error categories. The string form (see `to_string`) is what the
/// HTTP service puts in problem bodies, so never rename an existing value.
enum class ErrorCode {
  invalid_dimension,
  range,
  corrupt_document,
  validation,
  wrong_kind,
  parse,
  sentinel,
  semantic,
  dimension_mismatch,
  empty_region,
  backend_transport,
  protocol,
  fixture,
  arity,
  generation,
  not_found,
  io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed JSON or trailing garbage in a generator reply.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::parse, "byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Non-fatal fallbacks taken while processing (refiner loss, font substitution, ...).
using Warnings = std::vector<std::string>;

/// True for failures a caller may retry (transport-level problems).
inline bool is_retryable(const Error& e) { return e.code() == ErrorCode::backend_transport; }

}  // namespace sledge
