#include "json_codec.hpp"

#include <set>

namespace sledge::detail {

namespace {

[[noreturn]] void fail(ErrorCode code, std::size_t index, const std::string& what) {
  throw Error(code, "element " + std::to_string(index) + ": " + what);
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t index,
                              ErrorCode code) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(code, index, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key, std::size_t index,
                           ErrorCode code) {
  const auto& v = require(obj, key, index, code);
  if (!v.is_string()) fail(code, index, std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

int require_int(const nlohmann::json& v, const char* what, std::size_t index, ErrorCode code) {
  if (!v.is_number_integer()) fail(code, index, std::string(what) + " must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < INT32_MIN || n > INT32_MAX) fail(code, index, std::string(what) + " out of range");
  return static_cast<int>(n);
}

}  // namespace

ordered_json bbox_to_json(const BBox& b) { return ordered_json::array({b.x0, b.y0, b.x1, b.y1}); }

ordered_json element_to_json(const ElementMetadata& e) {
  ordered_json j;
  j["kind"] = std::string(to_string(e.kind));
  j["bbox"] = bbox_to_json(e.bbox);
  if (e.kind == ElementKind::text && e.text) {
    j["content"] = e.text->content;
    j["font_family"] = e.text->font_family;
    j["font_size"] = e.text->font_size;
    j["color"] = format_color(e.text->color);
  } else if (e.caption) {
    j["caption"] = *e.caption;
  }
  return j;
}

BBox bbox_from_json(const nlohmann::json& j, std::size_t index, ErrorCode code) {
  if (!j.is_array() || j.size() != 4) fail(code, index, "bbox must be an array of 4 integers");
  return {require_int(j[0], "bbox x0", index, code), require_int(j[1], "bbox y0", index, code),
          require_int(j[2], "bbox x1", index, code), require_int(j[3], "bbox y1", index, code)};
}

ElementMetadata element_from_json(const nlohmann::json& j, std::size_t index, ErrorCode code) {
  if (!j.is_object()) fail(code, index, "must be an object");
  const std::string kind = require_string(j, "kind", index, code);
  ElementMetadata e;
  std::set<std::string> allowed;
  if (kind == "text") {
    allowed = {"kind", "bbox", "content", "font_family", "font_size", "color"};
    e.kind = ElementKind::text;
    TextAttributes t;
    t.content = require_string(j, "content", index, code);
    t.font_family = require_string(j, "font_family", index, code);
    t.font_size = require_int(require(j, "font_size", index, code), "font_size", index, code);
    try {
      t.color = parse_color(require_string(j, "color", index, code));
    } catch (const Error& err) {
      fail(code, index, err.what());
    }
    e.text = std::move(t);
  } else if (kind == "image") {
    allowed = {"kind", "bbox", "caption"};
    e.kind = ElementKind::image;
    if (j.contains("caption")) e.caption = require_string(j, "caption", index, code);
  } else {
    fail(code, index, "unknown kind \"" + kind + "\"");
  }
  e.bbox = bbox_from_json(require(j, "bbox", index, code), index, code);
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) fail(code, index, "unknown key \"" + key + "\"");
  }
  return e;
}

std::string dump(const ordered_json& j, int indent) {
  return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::strict);
}

}  // namespace sledge::detail
