#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sledge/canvas.hpp"
#include "sledge/compositor.hpp"
#include "sledge/metadata.hpp"

namespace sledge {

class FontRegistry;

/// One atomic layered update: the instruction, what it added, and the
/// image layer + dilated mask used to blend it (absent for text-only steps).
struct StepRecord {
  std::size_t index = 0;
  std::string instruction;
  std::optional<std::string> asset_ref;
  std::vector<ElementMetadata> elements;
  std::optional<Canvas> image_layer;
  std::optional<Mask> mask;

  bool has_image_element() const;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct DesignDocument {
  int canvas_width = 1024;
  int canvas_height = 1024;
  Rgba background = kOpaqueWhite;
  std::optional<std::string> theme;
  std::vector<StepRecord> steps;

  friend bool operator==(const DesignDocument&, const DesignDocument&) = default;
};

DesignDocument make_document(int width, int height, Rgba background,
                             std::optional<std::string> theme = {});

/// Throws validation naming the offending element; checks bounds, element
/// invariants, and that layer/mask exist iff an image element does.
void validate_step(const DesignDocument& doc, const StepRecord& record);

/// Canvas after the first `upto` steps. Throws range for upto > steps and
/// corrupt_document for rasters that do not match the canvas size.
Canvas flatten(const DesignDocument& doc, std::size_t upto, const FontRegistry& fonts,
               Warnings* warnings = nullptr);
Canvas flatten(const DesignDocument& doc, std::size_t upto);

/// Partial update of a text element; unset fields are kept.
struct TextPatch {
  std::optional<std::string> content;
  std::optional<std::string> font_family;
  std::optional<int> font_size;
  std::optional<Rgba> color;
  std::optional<BBox> bbox;

  bool empty() const { return !content && !font_family && !font_size && !color && !bbox; }
};

/// Document with the patched element. The patched bbox may run past the
/// canvas edge (glyphs are clipped) but must overlap it.
/// Throws range (bad indices), wrong_kind, validation.
DesignDocument edit_text_attributes(const DesignDocument& doc, std::size_t step_index,
                                    std::size_t element_index, const TextPatch& patch);

/// Editing state over a document. Undo/redo move the cursor only; pushing
/// after an undo drops the redo tail.
class Session {
 public:
  Session(std::string id, DesignDocument document);
  Session(std::string id, DesignDocument document, std::size_t cursor);

  const std::string& id() const { return id_; }
  const DesignDocument& document() const { return document_; }
  std::size_t cursor() const { return cursor_; }

  /// Validates, truncates anything past the cursor, appends, advances.
  void push_step(StepRecord record);
  /// Return false (and do nothing) at the boundary.
  [[nodiscard]] bool undo();
  [[nodiscard]] bool redo();

  void edit_text(std::size_t step_index, std::size_t element_index, const TextPatch& patch);

  Canvas observable_canvas(const FontRegistry& fonts) const;
  Canvas observable_canvas() const;

 private:
  std::string id_;
  DesignDocument document_;
  std::size_t cursor_ = 0;
};

std::string new_session_id();

}  // namespace sledge
