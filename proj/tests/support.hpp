// Shared helpers and brute-force oracles for the test suites. The oracles
// here are written pixel-by-pixel and deliberately share no code with core.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sledge/canvas.hpp"
#include "sledge/compositor.hpp"
#include "sledge/document.hpp"
#include "sledge/error.hpp"
#include "sledge/metadata.hpp"
#include "sledge/text.hpp"

namespace sledge {

// Readable gtest failure output for rasters.
inline void PrintTo(const Canvas& c, std::ostream* os) {
  *os << "Canvas " << c.width() << "x" << c.height() << " sha256:" << digest(c).substr(0, 16);
}
inline void PrintTo(const Mask& m, std::ostream* os) {
  *os << "Mask " << m.width() << "x" << m.height() << " ones=" << m.count();
}
inline void PrintTo(const Rgba& p, std::ostream* os) {
  *os << format_color(p);
}

}  // namespace sledge

namespace sledge::testing {

inline Canvas random_canvas(std::mt19937_64& rng, int w, int h, bool opaque = false) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 4);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(rng() & 0xFF);
    if (opaque && i % 4 == 3) px[i] = 255;
  }
  return Canvas(w, h, std::move(px));
}

inline Mask random_mask(std::mt19937_64& rng, int w, int h, double density = 0.5) {
  std::bernoulli_distribution bit(density);
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  return m;
}

inline BBox random_bbox(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> dx(0, w - 1), dy(0, h - 1);
  int x0 = dx(rng), x1 = dx(rng), y0 = dy(rng), y1 = dy(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return {x0, y0, x1 + 1, y1 + 1};
}

// out = M*edited + (1-M)*base, one channel at a time.
inline Canvas oracle_blend(const Canvas& base, const Canvas& edited, const Mask& mask) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(base.width()) * base.height() * 4);
  for (int y = 0; y < base.height(); ++y) {
    for (int x = 0; x < base.width(); ++x) {
      const int m = mask.at(x, y) ? 1 : 0;
      const Rgba b = base.at(x, y);
      const Rgba e = edited.at(x, y);
      auto* p = out.data() + (static_cast<std::size_t>(y) * base.width() + x) * 4;
      p[0] = static_cast<std::uint8_t>(m * e.r + (1 - m) * b.r);
      p[1] = static_cast<std::uint8_t>(m * e.g + (1 - m) * b.g);
      p[2] = static_cast<std::uint8_t>(m * e.b + (1 - m) * b.b);
      p[3] = static_cast<std::uint8_t>(m * e.a + (1 - m) * b.a);
    }
  }
  return Canvas(base.width(), base.height(), std::move(out));
}

inline std::int64_t oracle_union_popcount(const std::vector<BBox>& boxes, int w, int h) {
  std::int64_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool in = false;
      for (const auto& b : boxes) in = in || (x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1);
      n += in;
    }
  }
  return n;
}

inline Mask oracle_dilate(const Mask& m, int r) {
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy) {
        for (int dx = -r; dx <= r && !any; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (sx >= 0 && sy >= 0 && sx < m.width() && sy < m.height() && m.at(sx, sy)) any = true;
        }
      }
      out.set(x, y, any);
    }
  }
  return out;
}

// Straight-alpha source-over as exact rationals, rounded half up.
inline Rgba oracle_over(Rgba dst, Rgba src) {
  // With a = alpha/255:  A = as + ad(1 - as);  C = (cs*as + cd*ad*(1 - as)) / A
  if (src.a == 0) return dst;  // bit-identical by contract, even for a transparent dst
  const std::int64_t as = src.a, ad = dst.a;
  const std::int64_t A_num = as * 255 + ad * (255 - as);  // A * 255^2
  auto round_div = [](std::int64_t num, std::int64_t den) { return (2 * num + den) / (2 * den); };
  auto ch = [&](std::int64_t cs, std::int64_t cd) {
    return static_cast<std::uint8_t>(round_div(cs * as * 255 + cd * ad * (255 - as), A_num));
  };
  return {ch(src.r, dst.r), ch(src.g, dst.g), ch(src.b, dst.b),
          static_cast<std::uint8_t>(round_div(A_num, 255))};
}

// Sequential per-pixel flatten: blend each layer under its mask, then paint
// the step's text rasters. Text rasters come from the engine's rasterizer,
// which is the unit under test elsewhere.
inline Canvas oracle_flatten(const DesignDocument& doc, std::size_t upto, const FontRegistry& fonts) {
  const int w = doc.canvas_width, h = doc.canvas_height;
  std::vector<Rgba> px(static_cast<std::size_t>(w) * h, doc.background);
  for (std::size_t s = 0; s < upto; ++s) {
    const auto& step = doc.steps[s];
    if (step.image_layer) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (step.mask->at(x, y)) px[static_cast<std::size_t>(y) * w + x] = step.image_layer->at(x, y);
    }
    for (const auto& e : step.elements) {
      if (e.kind != ElementKind::text) continue;
      const Canvas r = rasterize_text(e, fonts, nullptr);
      for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < r.width(); ++x) {
          const int cx = e.bbox.x0 + x, cy = e.bbox.y0 + y;
          if (cx < 0 || cy < 0 || cx >= w || cy >= h) continue;
          const Rgba src = r.at(x, y);
          if (src.a == 0) continue;
          auto& d = px[static_cast<std::size_t>(cy) * w + cx];
          d = oracle_over(d, src);
        }
      }
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(px.size() * 4);
  for (const auto& p : px) out.insert(out.end(), {p.r, p.g, p.b, p.a});
  return Canvas(w, h, std::move(out));
}

// Valid UTF-8 without control characters (newline optional), mixing ASCII,
// JSON metacharacters, sentinel lookalikes and multi-byte code points.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool newline) {
  static const std::vector<std::string> atoms = {
      "a", "Z", "7", " ", "\"", "\\", "{", "}", "[", "]", ":", ",", "<img>", "</img>",
      "\u00e9", "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x8e\x89", "\xe6\x97\xa5", "SALE", "/"};
  const std::size_t n = 1 + rng() % max_len;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (newline && rng() % 11 == 0) {
      out += '\n';
    } else {
      out += atoms[rng() % atoms.size()];
    }
  }
  return out;
}

inline ElementMetadata random_element(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coord(-50, 2000);
  BBox b{coord(rng), coord(rng), 0, 0};
  b.x1 = b.x0 + 1 + static_cast<int>(rng() % 500);
  b.y1 = b.y0 + 1 + static_cast<int>(rng() % 500);
  if (rng() % 2 == 0) {
    static const std::vector<std::string> families = {"sans", "serif-bold", "script", "mono",
                                                      "Fancy Display", "\xe6\x98\x8e\xe6\x9c\x9d"};
    TextAttributes t;
    t.content = random_text(rng, 12, true);
    t.font_family = families[rng() % families.size()];
    t.font_size = kMinFontSize + static_cast<int>(rng() % 300);
    t.color = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
               static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    return ElementMetadata::make_text(b, std::move(t));
  }
  std::optional<std::string> caption;
  if (rng() % 3 != 0) caption = rng() % 5 == 0 ? std::string() : random_text(rng, 8, true);
  return ElementMetadata::make_image(b, std::move(caption));
}

// Payloads that look like replies, sentinels or JSON, plus raw bytes.
inline std::string random_payload(std::mt19937_64& rng) {
  static const std::vector<std::string> lookalikes = {
      "{\"elements\":[]}",
      "{\"elements\":[{\"kind\":\"image\",\"bbox\":[0,0,1,1]}]}",
      "}]}", "<img>", "</img>", "\"", "\\", "{", "  ", "\n", "null", "\x89PNG\r\n\x1a\n"};
  std::string out;
  const std::size_t parts = rng() % 8;
  for (std::size_t i = 0; i < parts; ++i) {
    if (rng() % 3 == 0) {
      const std::size_t n = 1 + rng() % 16;
      for (std::size_t k = 0; k < n; ++k) out += static_cast<char>(rng() & 0xFF);
    } else {
      out += lookalikes[rng() % lookalikes.size()];
    }
  }
  return out;
}

inline GeneratorReply random_reply(std::mt19937_64& rng) {
  GeneratorReply r;
  const std::size_t n = rng() % 5;
  for (std::size_t i = 0; i < n; ++i) r.elements.push_back(random_element(rng));
  if (n == 0 || rng() % 2 == 0) r.image_payload = random_payload(rng);
  return r;
}

inline BBox random_text_box(std::mt19937_64& rng, int w, int h) {
  const int bw = std::min(w, 12 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, w - 11))));
  const int bh = std::min(h, 10 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, h / 2))));
  const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(w - bw + 1));
  const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(h - bh + 1));
  return {x0, y0, x0 + bw, y0 + bh};
}

// A valid step with 0-2 image and 0-2 text elements (at least one element).
// Image layers are random pixels restricted to a dilated union of the boxes.
inline StepRecord random_step(std::mt19937_64& rng, int w, int h) {
  static const std::vector<std::string> words = {"SALE", "Grand Opening", "50% off", "Caf\xc3\xa9",
                                                 "Summer\nNights", "Hi", "Join us today"};
  static const std::vector<std::string> families = {"sans", "serif", "serif-bold", "script", "mono"};
  StepRecord r;
  r.instruction = "random step";
  const std::size_t images = rng() % 3;
  std::size_t texts = rng() % 3;
  if (images + texts == 0) texts = 1;
  std::vector<BBox> boxes;
  for (std::size_t i = 0; i < images; ++i) {
    boxes.push_back(random_bbox(rng, w, h));
    r.elements.push_back(ElementMetadata::make_image(boxes.back(), "shape"));
  }
  for (std::size_t i = 0; i < texts; ++i) {
    TextAttributes t;
    t.content = words[rng() % words.size()];
    t.font_family = families[rng() % families.size()];
    t.font_size = 6 + static_cast<int>(rng() % 24);
    t.color = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
               static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng() % 2 ? 255 : 100 + rng() % 156)};
    r.elements.push_back(ElementMetadata::make_text(random_text_box(rng, w, h), std::move(t)));
  }
  if (!boxes.empty()) {
    r.mask = dilate(bbox_mask(boxes, w, h), static_cast<int>(rng() % 3));
    r.image_layer = restrict_to_mask(random_canvas(rng, w, h, rng() % 2 == 0), *r.mask);
  }
  return r;
}

inline DesignDocument random_document(std::mt19937_64& rng, int w, int h, std::size_t steps) {
  DesignDocument doc = make_document(w, h, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                                            static_cast<std::uint8_t>(rng()), 255},
                                     rng() % 2 ? std::optional<std::string>("Beach Party") : std::nullopt);
  for (std::size_t i = 0; i < steps; ++i) {
    StepRecord r = random_step(rng, w, h);
    r.index = i;
    doc.steps.push_back(std::move(r));
  }
  return doc;
}

// Error code thrown by `f`, or nullopt if it returned normally.
template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline bool inside_any(int x, int y, const std::vector<BBox>& boxes) {
  for (const auto& b : boxes)
    if (b.contains(x, y)) return true;
  return false;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sledge-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace sledge::testing
