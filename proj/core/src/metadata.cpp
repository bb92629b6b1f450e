#include "sledge/metadata.hpp"

#include "json_codec.hpp"

namespace sledge {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// End offset (exclusive) of the JSON object starting at `start`, or npos.
std::size_t object_end(std::string_view raw, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  return kind == ElementKind::text ? "text" : "image";
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, out of range.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

void validate_element(const ElementMetadata& e, std::size_t index, ErrorCode code) {
  auto fail = [&](const std::string& what) {
    throw Error(code, "element " + std::to_string(index) + ": " + what);
  };
  if (e.bbox.x0 >= e.bbox.x1 || e.bbox.y0 >= e.bbox.y1) {
    fail("bbox " + to_string(e.bbox) + " is empty or inverted");
  }
  if (e.kind == ElementKind::text) {
    if (!e.text) fail("text element without text attributes");
    if (e.caption) fail("text element must not carry a caption");
    const auto& t = *e.text;
    if (t.content.empty()) fail("text content is empty");
    if (!is_valid_utf8(t.content)) fail("text content is not valid UTF-8");
    for (const char ch : t.content) {
      const auto c = static_cast<unsigned char>(ch);
      if ((c < 0x20 && c != '\n') || c == 0x7F) fail("text content contains a control character");
    }
    if (t.font_family.empty() || !is_valid_utf8(t.font_family)) fail("font_family is empty");
    if (t.font_size < kMinFontSize) {
      fail("font_size " + std::to_string(t.font_size) + " is below " +
           std::to_string(kMinFontSize));
    }
  } else {
    if (e.text) fail("image element must not carry text attributes");
    if (e.caption && !is_valid_utf8(*e.caption)) fail("caption is not valid UTF-8");
  }
}

GeneratorReply parse_reply(std::string_view raw) {
  std::size_t start = 0;
  while (start < raw.size() && is_space(raw[start])) ++start;
  if (start == raw.size() || raw[start] != '{') {
    throw ParseError(start, "expected '{' opening the metadata object");
  }
  const std::size_t end = object_end(raw, start);
  if (end == std::string_view::npos) {
    throw ParseError(raw.size(), "unterminated metadata object");
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw.substr(0, end));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte > 0 ? e.byte - 1 : 0, e.what());
  }

  if (!doc.is_object()) throw ParseError(start, "metadata must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "elements") throw Error(ErrorCode::semantic, "unknown top-level key \"" + key + "\"");
  }
  auto it = doc.find("elements");
  if (it == doc.end() || !it->is_array()) {
    throw Error(ErrorCode::semantic, "\"elements\" must be an array");
  }

  GeneratorReply reply;
  for (std::size_t i = 0; i < it->size(); ++i) {
    ElementMetadata e = detail::element_from_json((*it)[i], i, ErrorCode::semantic);
    validate_element(e, i, ErrorCode::semantic);
    reply.elements.push_back(std::move(e));
  }

  std::string_view rest = raw.substr(end);
  std::size_t lead = 0;
  while (lead < rest.size() && is_space(rest[lead])) ++lead;
  rest.remove_prefix(lead);
  if (!rest.empty()) {
    if (rest.starts_with(kImageClose)) {
      throw Error(ErrorCode::sentinel, "closing </img> without an opening <img>");
    }
    if (!rest.starts_with(kImageOpen)) {
      throw ParseError(end + lead, "unexpected bytes after the metadata object");
    }
    std::size_t tail = rest.size();
    while (tail > 0 && is_space(rest[tail - 1])) --tail;
    const std::string_view framed = rest.substr(0, tail);
    if (framed.size() < kImageOpen.size() + kImageClose.size() || !framed.ends_with(kImageClose)) {
      throw Error(ErrorCode::sentinel, "<img> payload is not closed by </img>");
    }
    reply.image_payload = std::string(framed.substr(
        kImageOpen.size(), framed.size() - kImageOpen.size() - kImageClose.size()));
  }

  if (reply.elements.empty() && !reply.image_payload) {
    throw Error(ErrorCode::semantic, "reply has no elements and no image payload");
  }
  return reply;
}

std::string serialize_reply(const GeneratorReply& reply) {
  if (reply.elements.empty() && !reply.image_payload) {
    throw Error(ErrorCode::validation, "reply has no elements and no image payload");
  }
  detail::ordered_json elements = detail::ordered_json::array();
  for (std::size_t i = 0; i < reply.elements.size(); ++i) {
    validate_element(reply.elements[i], i, ErrorCode::validation);
    elements.push_back(detail::element_to_json(reply.elements[i]));
  }
  detail::ordered_json doc;
  doc["elements"] = std::move(elements);
  std::string out = detail::dump(doc);
  if (reply.image_payload) {
    out.append(kImageOpen);
    out.append(*reply.image_payload);
    out.append(kImageClose);
  }
  return out;
}

}  // namespace sledge
