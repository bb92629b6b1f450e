#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sledge/canvas.hpp"
#include "sledge/error.hpp"
#include "sledge/metadata.hpp"

namespace sledge {

/// A loaded TrueType face. Glyph rasterisation is serialised internally, so
/// one Font may be shared between threads.
class Font {
 public:
  explicit Font(const std::filesystem::path& file);
  ~Font();
  Font(const Font&) = delete;
  Font& operator=(const Font&) = delete;

  const std::filesystem::path& file() const { return file_; }

  /// Advance width of `text` in pixels at `pixel_size`.
  int measure(std::string_view text, int pixel_size) const;

  /// Greyscale coverage (0..255) of `text` drawn into a width x height
  /// buffer with the em-box top-left at (x, top). Clipped to the buffer.
  void draw_coverage(std::vector<std::uint8_t>& coverage, int width, int height,
                     std::string_view text, int x, int top, int pixel_size) const;

 private:
  struct Impl;
  std::filesystem::path file_;
  std::unique_ptr<Impl> impl_;
};

/// Family token -> font. Immutable after construction.
class FontRegistry {
 public:
  /// Reads `<dir>/fonts.json` ({"fallback": token, "families": {token: file}}).
  static FontRegistry load(const std::filesystem::path& dir);

  /// $SLEDGE_FONTS_DIR if set, else the fonts shipped with the build.
  static const FontRegistry& shared_default();
  static std::filesystem::path default_dir();

  struct Resolved {
    const Font& font;
    bool fell_back;
  };
  Resolved resolve(std::string_view family) const;

  bool has(std::string_view family) const;
  const std::string& fallback_family() const { return fallback_; }
  std::vector<std::string> families() const;

 private:
  std::string fallback_;
  std::map<std::string, std::shared_ptr<const Font>, std::less<>> fonts_;
};

struct TextLine {
  std::string text;
  int x = 0;         // left edge, canvas coordinates
  int baseline = 0;  // canvas coordinates
  int width = 0;
};

struct TextLayout {
  int font_size = 0;  // after shrink-to-fit
  int line_advance = 0;
  std::vector<TextLine> lines;
  bool overflows = false;  // still too large at the minimum size
};

/// Greedy word wrap at the box width, explicit newlines kept, block centred
/// both ways, line advance 1.2 x size; shrinks by 10% steps (min 4) to fit.
TextLayout layout_lines(std::string_view content, const BBox& bbox, const Font& font,
                        int font_size);

/// The text element drawn alone on a transparent bbox-sized raster
/// (colour channels constant, alpha = coverage x colour alpha).
Canvas rasterize_text(const ElementMetadata& element, const FontRegistry& fonts,
                      Warnings* warnings = nullptr);

/// Source-over of the element's text onto `canvas`, clipped to bbox and canvas.
/// Unknown families resolve to the fallback with a warning.
Canvas render_text(const Canvas& canvas, const ElementMetadata& element,
                   const FontRegistry& fonts, Warnings* warnings = nullptr);

}  // namespace sledge
