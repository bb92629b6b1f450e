#include "sledge/error.hpp"

namespace sledge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_dimension: return "invalid_dimension";
    case ErrorCode::range: return "range";
    case ErrorCode::corrupt_document: return "corrupt_document";
    case ErrorCode::validation: return "validation";
    case ErrorCode::wrong_kind: return "wrong_kind";
    case ErrorCode::parse: return "parse";
    case ErrorCode::sentinel: return "sentinel";
    case ErrorCode::semantic: return "semantic";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::empty_region: return "empty_region";
    case ErrorCode::backend_transport: return "backend_transport";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::fixture: return "fixture";
    case ErrorCode::arity: return "arity";
    case ErrorCode::generation: return "generation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace sledge
