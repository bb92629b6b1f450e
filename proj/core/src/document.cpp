#include "sledge/document.hpp"

#include <algorithm>
#include <random>

#include "sledge/text.hpp"

namespace sledge {

bool StepRecord::has_image_element() const {
  return std::any_of(elements.begin(), elements.end(),
                     [](const ElementMetadata& e) { return e.kind == ElementKind::image; });
}

DesignDocument make_document(int width, int height, Rgba background, std::optional<std::string> theme) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "canvas dimensions must be positive");
  }
  DesignDocument doc;
  doc.canvas_width = width;
  doc.canvas_height = height;
  doc.background = background;
  doc.theme = std::move(theme);
  return doc;
}

void validate_step(const DesignDocument& doc, const StepRecord& record) {
  if (record.elements.empty()) throw Error(ErrorCode::validation, "a step must add at least one element");
  for (std::size_t i = 0; i < record.elements.size(); ++i) {
    const auto& e = record.elements[i];
    validate_element(e, i, ErrorCode::validation);
    if (!e.bbox.within(doc.canvas_width, doc.canvas_height)) {
      throw Error(ErrorCode::validation,
                  "element " + std::to_string(i) + ": bbox " + to_string(e.bbox) + " exceeds the " +
                      std::to_string(doc.canvas_width) + "x" + std::to_string(doc.canvas_height) +
                      " canvas");
    }
  }
  const bool wants_layer = record.has_image_element();
  if (wants_layer != record.image_layer.has_value() || wants_layer != record.mask.has_value()) {
    throw Error(ErrorCode::validation,
                "image layer and mask must be present exactly when the step has an image element");
  }
  if (record.image_layer && (record.image_layer->width() != doc.canvas_width ||
                             record.image_layer->height() != doc.canvas_height)) {
    throw Error(ErrorCode::validation, "image layer size does not match the canvas");
  }
  if (record.mask && (record.mask->width() != doc.canvas_width ||
                      record.mask->height() != doc.canvas_height)) {
    throw Error(ErrorCode::validation, "mask size does not match the canvas");
  }
}

Canvas flatten(const DesignDocument& doc, std::size_t upto, const FontRegistry& fonts, Warnings* warnings) {
  if (upto > doc.steps.size()) {
    throw Error(ErrorCode::range, "flatten upto " + std::to_string(upto) + " but the document has " +
                                      std::to_string(doc.steps.size()) + " steps");
  }
  Canvas canvas = new_canvas(doc.canvas_width, doc.canvas_height, doc.background);
  for (std::size_t s = 0; s < upto; ++s) {
    const StepRecord& step = doc.steps[s];
    if (step.image_layer) {
      if (!step.mask || !step.image_layer->same_size(canvas) ||
          step.mask->width() != canvas.width() || step.mask->height() != canvas.height()) {
        throw Error(ErrorCode::corrupt_document,
                    "step " + std::to_string(s) + " raster does not match the canvas size");
      }
      canvas = blend(canvas, *step.image_layer, *step.mask);
    }
    for (const auto& e : step.elements) {
      if (e.kind == ElementKind::text) canvas = render_text(canvas, e, fonts, warnings);
    }
  }
  return canvas;
}

Canvas flatten(const DesignDocument& doc, std::size_t upto) {
  return flatten(doc, upto, FontRegistry::shared_default());
}

DesignDocument edit_text_attributes(const DesignDocument& doc, std::size_t step_index,
                                    std::size_t element_index, const TextPatch& patch) {
  if (step_index >= doc.steps.size()) {
    throw Error(ErrorCode::range, "no step " + std::to_string(step_index));
  }
  if (element_index >= doc.steps[step_index].elements.size()) {
    throw Error(ErrorCode::range, "step " + std::to_string(step_index) + " has no element " +
                                      std::to_string(element_index));
  }
  DesignDocument out = doc;
  ElementMetadata& e = out.steps[step_index].elements[element_index];
  if (e.kind != ElementKind::text || !e.text) {
    throw Error(ErrorCode::wrong_kind, "element " + std::to_string(element_index) + " of step " +
                                           std::to_string(step_index) + " is an image element");
  }
  if (patch.content) e.text->content = *patch.content;
  if (patch.font_family) e.text->font_family = *patch.font_family;
  if (patch.font_size) e.text->font_size = *patch.font_size;
  if (patch.color) e.text->color = *patch.color;
  if (patch.bbox) e.bbox = *patch.bbox;
  validate_element(e, element_index, ErrorCode::validation);
  if (e.bbox.intersect({0, 0, doc.canvas_width, doc.canvas_height}).area() == 0) {
    throw Error(ErrorCode::validation, "patched bbox " + to_string(e.bbox) + " lies outside the canvas");
  }
  return out;
}

Session::Session(std::string id, DesignDocument document)
    : Session(std::move(id), std::move(document), 0) {
  cursor_ = document_.steps.size();
}

Session::Session(std::string id, DesignDocument document, std::size_t cursor)
    : id_(std::move(id)), document_(std::move(document)), cursor_(cursor) {
  if (cursor_ > document_.steps.size()) {
    throw Error(ErrorCode::range, "session cursor beyond the step count");
  }
}

void Session::push_step(StepRecord record) {
  validate_step(document_, record);
  document_.steps.erase(document_.steps.begin() + static_cast<std::ptrdiff_t>(cursor_),
                        document_.steps.end());
  record.index = cursor_;
  document_.steps.push_back(std::move(record));
  ++cursor_;
}

bool Session::undo() {
  if (cursor_ == 0) return false;
  --cursor_;
  return true;
}

bool Session::redo() {
  if (cursor_ == document_.steps.size()) return false;
  ++cursor_;
  return true;
}

void Session::edit_text(std::size_t step_index, std::size_t element_index, const TextPatch& patch) {
  document_ = edit_text_attributes(document_, step_index, element_index, patch);
}

Canvas Session::observable_canvas(const FontRegistry& fonts) const {
  return flatten(document_, cursor_, fonts);
}

Canvas Session::observable_canvas() const { return observable_canvas(FontRegistry::shared_default()); }

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int word = 0; word < 2; ++word) {
    std::uint64_t v = rng();
    for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(kHex[v & 15]);
  }
  return id;
}

}  // namespace sledge
