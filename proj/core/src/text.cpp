#include "sledge/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <mutex>
#include <opencv2/core.hpp>
#include <opencv2/freetype.hpp>
#include <opencv2/imgproc.hpp>

#include "sledge/image_io.hpp"

#ifndef SLEDGE_FONTS_DIR_DEFAULT
#define SLEDGE_FONTS_DIR_DEFAULT "fonts"
#endif
#ifndef SLEDGE_FONTS_DIR_INSTALLED
#define SLEDGE_FONTS_DIR_INSTALLED SLEDGE_FONTS_DIR_DEFAULT
#endif

namespace sledge {

struct Font::Impl {
  std::mutex mutex;
  cv::Ptr<cv::freetype::FreeType2> face;
};

Font::Font(const std::filesystem::path& file) : file_(file), impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::exists(file)) throw Error(ErrorCode::not_found, "font file " + file.string());
  impl_->face = cv::freetype::createFreeType2();
  try {
    impl_->face->loadFontData(file.string(), 0);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::io, "cannot load font " + file.string() + ": " + e.what());
  }
}

Font::~Font() = default;

int Font::measure(std::string_view text, int pixel_size) const {
  if (text.empty()) return 0;
  std::lock_guard lock(impl_->mutex);
  int baseline = 0;
  const cv::Size size = impl_->face->getTextSize(std::string(text), pixel_size, -1, &baseline);
  return std::max(0, size.width);
}

void Font::draw_coverage(std::vector<std::uint8_t>& coverage, int width, int height,
                         std::string_view text, int x, int top, int pixel_size) const {
  if (text.empty() || width <= 0 || height <= 0) return;
  // The FreeType backend only draws into 3-channel images; channel 0 is the coverage.
  cv::Mat scratch(height, width, CV_8UC3, cv::Scalar(0, 0, 0));
  {
    std::lock_guard lock(impl_->mutex);
    impl_->face->putText(scratch, std::string(text), cv::Point(x, top), pixel_size,
                         cv::Scalar(255, 255, 255), -1, cv::LINE_AA, false);
  }
  for (int row = 0; row < height; ++row) {
    const auto* src = scratch.ptr<std::uint8_t>(row);
    auto* dst = coverage.data() + static_cast<std::size_t>(row) * width;
    for (int col = 0; col < width; ++col) dst[col] = std::max(dst[col], src[col * 3]);
  }
}

FontRegistry FontRegistry::load(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "fonts.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw Error(ErrorCode::corrupt_document, "fonts.json in " + dir.string() + " is not a JSON object");
  }
  FontRegistry reg;
  reg.fallback_ = manifest.value("fallback", std::string("sans"));
  const auto families = manifest.find("families");
  if (families == manifest.end() || !families->is_object()) {
    throw Error(ErrorCode::corrupt_document, "fonts.json needs a \"families\" object");
  }
  for (const auto& [token, file] : families->items()) {
    if (!file.is_string()) throw Error(ErrorCode::corrupt_document, "font path for " + token);
    std::filesystem::path path = file.get<std::string>();
    if (path.is_relative()) path = dir / path;
    reg.fonts_.emplace(token, std::make_shared<const Font>(path));
  }
  if (!reg.fonts_.contains(reg.fallback_)) {
    throw Error(ErrorCode::corrupt_document, "fallback family \"" + reg.fallback_ + "\" is not registered");
  }
  return reg;
}

std::filesystem::path FontRegistry::default_dir() {
  if (const char* env = std::getenv("SLEDGE_FONTS_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  if (std::filesystem::exists(SLEDGE_FONTS_DIR_DEFAULT "/fonts.json")) return SLEDGE_FONTS_DIR_DEFAULT;
  return SLEDGE_FONTS_DIR_INSTALLED;
}

const FontRegistry& FontRegistry::shared_default() {
  static const FontRegistry registry = load(default_dir());
  return registry;
}

FontRegistry::Resolved FontRegistry::resolve(std::string_view family) const {
  if (auto it = fonts_.find(family); it != fonts_.end()) return {*it->second, false};
  return {*fonts_.find(fallback_)->second, true};
}

bool FontRegistry::has(std::string_view family) const { return fonts_.find(family) != fonts_.end(); }

std::vector<std::string> FontRegistry::families() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : fonts_) out.push_back(k);
  return out;
}

namespace {

std::vector<std::string> split_words(std::string_view paragraph) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < paragraph.size()) {
    while (i < paragraph.size() && paragraph[i] == ' ') ++i;
    std::size_t j = i;
    while (j < paragraph.size() && paragraph[j] != ' ') ++j;
    if (j > i) words.emplace_back(paragraph.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::string> wrap(std::string_view content, int max_width, const Font& font, int size) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = content.find('\n', start);
    const std::string_view paragraph =
        content.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    std::string line;
    for (const auto& word : split_words(paragraph)) {
      if (line.empty()) {
        line = word;
        continue;
      }
      std::string candidate = line + " " + word;
      if (font.measure(candidate, size) <= max_width) {
        line = std::move(candidate);
      } else {
        lines.push_back(std::move(line));
        line = word;
      }
    }
    lines.push_back(std::move(line));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

int advance_for(int size) { return static_cast<int>(std::lround(1.2 * size)); }

}  // namespace

TextLayout layout_lines(std::string_view content, const BBox& bbox, const Font& font, int font_size) {
  int size = std::max(font_size, kMinFontSize);
  std::vector<std::string> lines;
  std::vector<int> widths;
  bool fits = false;
  while (true) {
    lines = wrap(content, bbox.width(), font, size);
    widths.clear();
    int widest = 0;
    for (const auto& l : lines) {
      widths.push_back(font.measure(l, size));
      widest = std::max(widest, widths.back());
    }
    const std::int64_t block = std::int64_t{advance_for(size)} * static_cast<std::int64_t>(lines.size());
    fits = block <= bbox.height() && widest <= bbox.width();
    if (fits || size == kMinFontSize) break;
    size = std::max(kMinFontSize, std::min(size - 1, static_cast<int>(std::floor(size * 0.9))));
  }

  TextLayout layout;
  layout.font_size = size;
  layout.line_advance = advance_for(size);
  layout.overflows = !fits;
  const int block = layout.line_advance * static_cast<int>(lines.size());
  // Floor division keeps centring stable for negative slack (overflow).
  const int slack_y = bbox.height() - block;
  const int top = bbox.y0 + (slack_y >= 0 ? slack_y / 2 : -((-slack_y + 1) / 2));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int slack_x = bbox.width() - widths[i];
    TextLine line;
    line.text = lines[i];
    line.width = widths[i];
    line.x = bbox.x0 + (slack_x >= 0 ? slack_x / 2 : -((-slack_x + 1) / 2));
    // Each line owns an advance-tall cell; the em box sits at its top.
    line.baseline = top + static_cast<int>(i) * layout.line_advance + size;
    layout.lines.push_back(std::move(line));
  }
  return layout;
}

Canvas rasterize_text(const ElementMetadata& element, const FontRegistry& fonts, Warnings* warnings) {
  if (element.kind != ElementKind::text || !element.text) {
    throw Error(ErrorCode::wrong_kind, "rasterize_text needs a text element");
  }
  const auto& attrs = *element.text;
  const auto resolved = fonts.resolve(attrs.font_family);
  if (resolved.fell_back && warnings != nullptr) {
    warnings->push_back("unknown font family \"" + attrs.font_family + "\", using \"" +
                        fonts.fallback_family() + "\"");
  }
  const BBox& box = element.bbox;
  const int w = box.width();
  const int h = box.height();
  const TextLayout layout = layout_lines(attrs.content, box, resolved.font, attrs.font_size);

  std::vector<std::uint8_t> coverage(static_cast<std::size_t>(w) * h, 0);
  for (const auto& line : layout.lines) {
    resolved.font.draw_coverage(coverage, w, h, line.text, line.x - box.x0,
                                line.baseline - layout.font_size - box.y0, layout.font_size);
  }

  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 4);
  for (std::size_t i = 0; i < coverage.size(); ++i) {
    px[i * 4] = attrs.color.r;
    px[i * 4 + 1] = attrs.color.g;
    px[i * 4 + 2] = attrs.color.b;
    px[i * 4 + 3] = static_cast<std::uint8_t>((coverage[i] * attrs.color.a + 127) / 255);
  }
  return Canvas(w, h, std::move(px));
}

Canvas render_text(const Canvas& canvas, const ElementMetadata& element, const FontRegistry& fonts,
                   Warnings* warnings) {
  const Canvas raster = rasterize_text(element, fonts, warnings);
  return composite_at(canvas, raster, element.bbox.x0, element.bbox.y0);
}

}  // namespace sledge
