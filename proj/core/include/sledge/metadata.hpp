#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sledge/canvas.hpp"
#include "sledge/error.hpp"

namespace sledge {

enum class ElementKind { text, image };

std::string_view to_string(ElementKind kind);

struct TextAttributes {
  std::string content;
  std::string font_family;
  int font_size = 0;
  Rgba color = kOpaqueBlack;

  friend bool operator==(const TextAttributes&, const TextAttributes&) = default;
};

inline constexpr int kMinFontSize = 4;

/// One layer's record. `text` is set iff kind == text; `caption` only for images.
struct ElementMetadata {
  ElementKind kind = ElementKind::image;
  BBox bbox;
  std::optional<TextAttributes> text;
  std::optional<std::string> caption;

  static ElementMetadata make_text(BBox bbox, TextAttributes attrs) {
    return {ElementKind::text, bbox, std::move(attrs), std::nullopt};
  }
  static ElementMetadata make_image(BBox bbox, std::optional<std::string> caption = {}) {
    return {ElementKind::image, bbox, std::nullopt, std::move(caption)};
  }

  friend bool operator==(const ElementMetadata&, const ElementMetadata&) = default;
};

/// Throws (with `code`) describing the first violated invariant; `index`
/// names the element in the message.
void validate_element(const ElementMetadata& e, std::size_t index,
                      ErrorCode code = ErrorCode::semantic);

/// UTF-8 well-formedness.
bool is_valid_utf8(std::string_view s);

/// Parsed M_{t+1} plus the optional opaque payload framed by <img> ... </img>.
struct GeneratorReply {
  std::vector<ElementMetadata> elements;
  std::optional<std::string> image_payload;

  friend bool operator==(const GeneratorReply&, const GeneratorReply&) = default;
};

inline constexpr std::string_view kImageOpen = "<img>";
inline constexpr std::string_view kImageClose = "</img>";

/// Strict parse of `{"elements":[...]}` optionally followed by `<img>payload</img>`.
/// Throws ParseError (with byte offset), sentinel or semantic errors.
GeneratorReply parse_reply(std::string_view raw);

/// Canonical form: fixed key order, uppercase hex, no whitespace.
/// Throws validation if the reply violates its invariants.
std::string serialize_reply(const GeneratorReply& reply);

}  // namespace sledge
