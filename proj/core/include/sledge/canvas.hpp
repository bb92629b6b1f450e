#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sledge {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

inline constexpr Rgba kOpaqueWhite{255, 255, 255, 255};
inline constexpr Rgba kOpaqueBlack{0, 0, 0, 255};
inline constexpr Rgba kTransparent{0, 0, 0, 0};

/// "#RRGGBBAA" (uppercase). `parse_color` also accepts "#RRGGBB" and lowercase.
std::string format_color(Rgba c);
Rgba parse_color(std::string_view text);

/// Half-open pixel rectangle: [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t area() const {
    return is_proper() ? std::int64_t{width()} * height() : 0;
  }
  bool is_proper() const { return x0 < x1 && y0 < y1; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool within(int canvas_width, int canvas_height) const {
    return is_proper() && x0 >= 0 && y0 >= 0 && x1 <= canvas_width && y1 <= canvas_height;
  }
  BBox intersect(const BBox& o) const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

std::string to_string(const BBox& b);

/// Immutable RGBA8 raster, row-major, origin top-left. Copies share storage.
class Canvas {
 public:
  /// Throws invalid_dimension for non-positive sizes and corrupt_document
  /// when the buffer length is not width*height*4.
  Canvas(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const std::uint8_t> pixels() const { return *pixels_; }

  Rgba at(int x, int y) const {
    const auto* p = pixels_->data() + (static_cast<std::size_t>(y) * width_ + x) * 4;
    return {p[0], p[1], p[2], p[3]};
  }

  bool same_size(const Canvas& o) const { return width_ == o.width_ && height_ == o.height_; }

  /// Mutable copy of the pixel buffer, for building a derived canvas.
  std::vector<std::uint8_t> copy_pixels() const { return *pixels_; }

  friend bool operator==(const Canvas& a, const Canvas& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           (a.pixels_ == b.pixels_ || *a.pixels_ == *b.pixels_);
  }

 private:
  int width_;
  int height_;
  std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
};

Canvas new_canvas(int width, int height, Rgba background);

/// Straight-alpha source-over of `src` onto `dst`, integer arithmetic.
/// A fully transparent source leaves `dst` bit-identical; an opaque one replaces it.
Rgba composite_over(Rgba dst, Rgba src);

/// Source-over of `layer` placed with its top-left at (x, y), clipped to the canvas.
Canvas composite_at(const Canvas& base, const Canvas& layer, int x, int y);

/// Nearest-neighbour resample.
Canvas resize_nearest(const Canvas& src, int width, int height);

/// Hex SHA-256 over the dimensions and pixel bytes; independent of any file encoding.
std::string digest(const Canvas& c);

}  // namespace sledge
