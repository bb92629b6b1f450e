// Internal: ElementMetadata <-> JSON, shared by the reply grammar,
// document.json and the HTTP API.
#pragma once

#include <json.hpp>
#include <string>

#include "sledge/metadata.hpp"

namespace sledge::detail {

using ordered_json = nlohmann::ordered_json;

ordered_json bbox_to_json(const BBox& b);
ordered_json element_to_json(const ElementMetadata& e);

/// Strict: unknown keys, missing keys and wrong types throw `code`.
/// Does not run validate_element.
BBox bbox_from_json(const nlohmann::json& j, std::size_t index, ErrorCode code);
ElementMetadata element_from_json(const nlohmann::json& j, std::size_t index, ErrorCode code);

/// Compact or indented dump with UTF-8 kept verbatim.
std::string dump(const ordered_json& j, int indent = -1);

}  // namespace sledge::detail
