#include "sledge/canvas.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "sledge/error.hpp"
#include "sledge/image_io.hpp"

namespace sledge {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string format_color(Rgba c) {
  char buf[10];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X%02X", c.r, c.g, c.b, c.a);
  return buf;
}

Rgba parse_color(std::string_view text) {
  if ((text.size() != 7 && text.size() != 9) || text[0] != '#') {
    throw Error(ErrorCode::validation,
                "color must be #RRGGBB or #RRGGBBAA, got \"" + std::string(text) + "\"");
  }
  std::uint8_t channels[4] = {0, 0, 0, 255};
  for (std::size_t i = 0; i * 2 + 1 < text.size(); ++i) {
    const int hi = hex_value(text[1 + 2 * i]);
    const int lo = hex_value(text[2 + 2 * i]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::validation, "bad hex digit in color \"" + std::string(text) + "\"");
    }
    channels[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return {channels[0], channels[1], channels[2], channels[3]};
}

BBox BBox::intersect(const BBox& o) const {
  BBox r{std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
  if (!r.is_proper()) return {};
  return r;
}

std::string to_string(const BBox& b) {
  return "[" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) +
         "," + std::to_string(b.y1) + "]";
}

Canvas::Canvas(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "canvas dimensions must be positive, got " +
                                                  std::to_string(width) + "x" +
                                                  std::to_string(height));
  }
  if (pixels.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(ErrorCode::corrupt_document, "pixel buffer has " + std::to_string(pixels.size()) +
                                                 " bytes, expected " +
                                                 std::to_string(std::size_t{4} * width * height));
  }
  pixels_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(pixels));
}

Canvas new_canvas(int width, int height, Rgba background) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "canvas dimensions must be positive, got " +
                                                  std::to_string(width) + "x" +
                                                  std::to_string(height));
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < px.size(); i += 4) {
    px[i] = background.r;
    px[i + 1] = background.g;
    px[i + 2] = background.b;
    px[i + 3] = background.a;
  }
  return Canvas(width, height, std::move(px));
}

Rgba composite_over(Rgba dst, Rgba src) {
  if (src.a == 255) return src;
  if (src.a == 0) return dst;
  // Everything below is scaled by 255 to stay in integers.
  const std::uint32_t sa = src.a;
  const std::uint32_t dst_weight = std::uint32_t{dst.a} * (255 - sa);
  const std::uint32_t out_a_scaled = sa * 255 + dst_weight;
  auto channel = [&](std::uint8_t s, std::uint8_t d) {
    const std::uint32_t num = std::uint32_t{s} * sa * 255 + std::uint32_t{d} * dst_weight;
    return static_cast<std::uint8_t>((num + out_a_scaled / 2) / out_a_scaled);
  };
  return {channel(src.r, dst.r), channel(src.g, dst.g), channel(src.b, dst.b),
          static_cast<std::uint8_t>((out_a_scaled + 127) / 255)};
}

Canvas composite_at(const Canvas& base, const Canvas& layer, int x, int y) {
  auto px = base.copy_pixels();
  const BBox target = BBox{x, y, x + layer.width(), y + layer.height()}.intersect(
      BBox{0, 0, base.width(), base.height()});
  for (int cy = target.y0; cy < target.y1; ++cy) {
    for (int cx = target.x0; cx < target.x1; ++cx) {
      const Rgba src = layer.at(cx - x, cy - y);
      if (src.a == 0) continue;
      auto* p = px.data() + (static_cast<std::size_t>(cy) * base.width() + cx) * 4;
      const Rgba out = composite_over({p[0], p[1], p[2], p[3]}, src);
      p[0] = out.r;
      p[1] = out.g;
      p[2] = out.b;
      p[3] = out.a;
    }
  }
  return Canvas(base.width(), base.height(), std::move(px));
}

Canvas resize_nearest(const Canvas& src, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "resize target must be positive");
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 4);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<std::int64_t>(y) * src.height() / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(static_cast<std::int64_t>(x) * src.width() / width);
      const Rgba c = src.at(sx, sy);
      auto* p = px.data() + (static_cast<std::size_t>(y) * width + x) * 4;
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
      p[3] = c.a;
    }
  }
  return Canvas(width, height, std::move(px));
}

std::string digest(const Canvas& c) {
  std::string data = std::to_string(c.width()) + "x" + std::to_string(c.height()) + ":";
  const auto px = c.pixels();
  data.append(reinterpret_cast<const char*>(px.data()), px.size());
  return sha256_hex(data);
}

}  // namespace sledge
