#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <random>

#include "sledge/backends.hpp"

namespace sledge {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has_word(const std::string& text, std::string_view word) {
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + word.size();
    // Allow plural / -ed / -ing suffixes on the right.
    const bool right_ok = end >= text.size() || !std::isalpha(static_cast<unsigned char>(text[end])) ||
                          text[end] == 's' || text.compare(end, 2, "ed") == 0 ||
                          text.compare(end, 3, "ing") == 0;
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

template <std::size_t N>
bool has_any(const std::string& text, const std::array<std::string_view, N>& words) {
  return std::any_of(words.begin(), words.end(), [&](std::string_view w) { return has_word(text, w); });
}

std::optional<std::string> quoted_string(std::string_view s) {
  // Curly double quotes first, then straight double quotes, then single quotes
  // that are not apostrophes inside a word.
  static constexpr std::string_view kOpen = "\xE2\x80\x9C";
  static constexpr std::string_view kClose = "\xE2\x80\x9D";
  if (auto a = s.find(kOpen); a != std::string_view::npos) {
    auto b = s.find(kClose, a + kOpen.size());
    if (b != std::string_view::npos && b > a + kOpen.size()) {
      return std::string(s.substr(a + kOpen.size(), b - a - kOpen.size()));
    }
  }
  if (auto a = s.find('"'); a != std::string_view::npos) {
    auto b = s.find('"', a + 1);
    if (b != std::string_view::npos && b > a + 1) return std::string(s.substr(a + 1, b - a - 1));
  }
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (s[a] != '\'' || (a > 0 && is_word(s[a - 1]))) continue;
    for (std::size_t b = a + 2; b < s.size(); ++b) {
      if (s[b] == '\'' && (b + 1 == s.size() || !is_word(s[b + 1]))) {
        return std::string(s.substr(a + 1, b - a - 1));
      }
    }
  }
  return std::nullopt;
}

struct NamedColor {
  std::string_view name;
  Rgba color;
};

constexpr std::array<NamedColor, 16> kColors = {{
    {"black", {0, 0, 0, 255}},       {"white", {255, 255, 255, 255}}, {"red", {214, 40, 40, 255}},
    {"orange", {247, 127, 0, 255}},  {"yellow", {252, 191, 73, 255}}, {"gold", {212, 175, 55, 255}},
    {"green", {42, 157, 143, 255}},  {"teal", {0, 128, 128, 255}},    {"blue", {38, 70, 166, 255}},
    {"navy", {20, 33, 61, 255}},     {"purple", {106, 76, 147, 255}}, {"pink", {255, 133, 161, 255}},
    {"brown", {121, 85, 61, 255}},   {"gray", {128, 128, 128, 255}},  {"grey", {128, 128, 128, 255}},
    {"beige", {237, 224, 200, 255}},
}};

std::optional<Rgba> named_color(const std::string& text) {
  // Earliest mention wins so "white text on a red banner" picks white.
  std::optional<Rgba> best;
  std::size_t best_pos = std::string::npos;
  for (const auto& c : kColors) {
    std::size_t pos = 0;
    while ((pos = text.find(c.name, pos)) != std::string::npos) {
      const std::size_t end = pos + c.name.size();
      const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
      const bool right_ok = end >= text.size() || !std::isalpha(static_cast<unsigned char>(text[end]));
      if (left_ok && right_ok) {
        if (pos < best_pos) {
          best_pos = pos;
          best = c.color;
        }
        break;
      }
      pos = end;
    }
  }
  return best;
}

Rgba hashed_color(std::mt19937_64& rng) {
  const auto v = rng();
  return {static_cast<std::uint8_t>(40 + (v & 0xFF) % 176), static_cast<std::uint8_t>(40 + ((v >> 8) & 0xFF) % 176),
          static_cast<std::uint8_t>(40 + ((v >> 16) & 0xFF) % 176), 255};
}

BBox clamp_box(BBox b, int w, int h) {
  b.x0 = std::clamp(b.x0, 0, w - 1);
  b.y0 = std::clamp(b.y0, 0, h - 1);
  b.x1 = std::clamp(b.x1, b.x0 + 1, w);
  b.y1 = std::clamp(b.y1, b.y0 + 1, h);
  return b;
}

// Places a bw x bh box using left/right/top/bottom keywords; centred otherwise.
BBox place(const std::string& text, int w, int h, int bw, int bh) {
  bw = std::clamp(bw, 1, w);
  bh = std::clamp(bh, 1, h);
  const int margin = std::max(w, h) / 32;
  int x0 = (w - bw) / 2;
  int y0 = (h - bh) / 2;
  if (has_word(text, "left")) x0 = std::min(margin, w - bw);
  if (has_word(text, "right")) x0 = std::max(0, w - margin - bw);
  if (has_word(text, "top") || has_word(text, "upper")) y0 = std::min(margin, h - bh);
  if (has_word(text, "bottom") || has_word(text, "lower")) y0 = std::max(0, h - margin - bh);
  return clamp_box({x0, y0, x0 + bw, y0 + bh}, w, h);
}

int scale_side(const std::string& text, int w, int h) {
  const int base = std::min(w, h);
  if (has_word(text, "large") || has_word(text, "big") || has_word(text, "huge")) return std::max(1, base / 2);
  if (has_word(text, "small") || has_word(text, "tiny")) return std::max(1, base / 5);
  return std::max(1, base / 3);
}

std::uint8_t lerp(std::uint8_t a, std::uint8_t b, int num, int den) {
  if (den <= 0) return a;
  return static_cast<std::uint8_t>(a + ((b - a) * num + (b >= a ? den / 2 : -den / 2)) / den);
}

void put(std::vector<std::uint8_t>& px, int w, int x, int y, Rgba c) {
  auto* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 4;
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
  p[3] = c.a;
}

Rgba get(const std::vector<std::uint8_t>& px, int w, int x, int y) {
  const auto* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 4;
  return {p[0], p[1], p[2], p[3]};
}

}  // namespace

GeneratorResult MockGenerator::generate(const GeneratorRequest& request) {
  const int w = request.canvas.width();
  const int h = request.canvas.height();
  const std::uint64_t key = mix(fnv1a(request.instruction) ^ mix(request.seed));
  std::mt19937_64 rng(key);
  const std::string text = lower(request.instruction);

  std::vector<std::uint8_t> px = request.canvas.copy_pixels();
  std::vector<ElementMetadata> elements;

  static constexpr std::array<std::string_view, 4> kBackground = {"background", "gradient", "backdrop",
                                                                  "wallpaper"};
  static constexpr std::array<std::string_view, 6> kPicture = {"photo", "image", "illustration",
                                                               "picture", "drawing", "graphic"};
  static constexpr std::array<std::string_view, 5> kRect = {"rectangle", "square", "box", "banner",
                                                            "panel"};

  const auto quoted = quoted_string(request.instruction);

  if (request.asset) {
    const Canvas& asset = *request.asset;
    const int side = std::max(1, std::min(w, h) / 4);
    int bw = side;
    int bh = side;
    if (asset.width() >= asset.height()) {
      bh = std::max(1, static_cast<int>(std::lround(double(side) * asset.height() / asset.width())));
    } else {
      bw = std::max(1, static_cast<int>(std::lround(double(side) * asset.width() / asset.height())));
    }
    const BBox box = place(text, w, h, bw, bh);
    const Canvas scaled = resize_nearest(asset, box.width(), box.height());
    for (int y = 0; y < box.height(); ++y) {
      for (int x = 0; x < box.width(); ++x) {
        put(px, w, box.x0 + x, box.y0 + y, composite_over(get(px, w, box.x0 + x, box.y0 + y), scaled.at(x, y)));
      }
    }
    elements.push_back(ElementMetadata::make_image(box, std::string("inserted asset")));
  } else if (has_any(text, kBackground)) {
    const bool warm = has_word(text, "warm") || has_word(text, "sunset");
    const bool cool = has_word(text, "cool") || has_word(text, "ocean") || has_word(text, "cold");
    Rgba top = hashed_color(rng);
    Rgba bottom = hashed_color(rng);
    if (warm) {
      top = {255, static_cast<std::uint8_t>(170 + rng() % 60), static_cast<std::uint8_t>(60 + rng() % 60), 255};
      bottom = {static_cast<std::uint8_t>(200 + rng() % 56), static_cast<std::uint8_t>(60 + rng() % 60),
                static_cast<std::uint8_t>(40 + rng() % 40), 255};
    } else if (cool) {
      top = {static_cast<std::uint8_t>(120 + rng() % 60), static_cast<std::uint8_t>(190 + rng() % 60), 255, 255};
      bottom = {static_cast<std::uint8_t>(20 + rng() % 40), static_cast<std::uint8_t>(60 + rng() % 60),
                static_cast<std::uint8_t>(140 + rng() % 80), 255};
    } else if (auto named = named_color(text)) {
      top = *named;
      bottom = {lerp(named->r, 0, 1, 3), lerp(named->g, 0, 1, 3), lerp(named->b, 0, 1, 3), 255};
    }
    for (int y = 0; y < h; ++y) {
      const Rgba c{lerp(top.r, bottom.r, y, h - 1), lerp(top.g, bottom.g, y, h - 1),
                   lerp(top.b, bottom.b, y, h - 1), 255};
      for (int x = 0; x < w; ++x) put(px, w, x, y, c);
    }
    elements.push_back(ElementMetadata::make_image({0, 0, w, h}, std::string("background")));
  } else if (quoted && !quoted->empty() && is_valid_utf8(*quoted)) {
    int font_size = std::max(kMinFontSize, h / 16);
    if (has_word(text, "title") || has_word(text, "headline") || has_word(text, "large") ||
        has_word(text, "big")) {
      font_size = std::max(kMinFontSize, h / 10);
    } else if (has_word(text, "small") || has_word(text, "caption") || has_word(text, "subtitle")) {
      font_size = std::max(kMinFontSize, h / 24);
    }
    const int box_h = std::clamp(font_size * 2, 1, h);
    double centre = 0.0;
    if (has_word(text, "top") || has_word(text, "upper")) {
      centre = 0.15;
    } else if (has_word(text, "bottom") || has_word(text, "lower") || has_word(text, "footer")) {
      centre = 0.85;
    } else if (has_word(text, "center") || has_word(text, "centre") || has_word(text, "middle")) {
      centre = 0.5;
    } else {
      static constexpr std::array<double, 4> kBands = {0.3, 0.45, 0.6, 0.75};
      centre = kBands[rng() % kBands.size()];
    }
    const int y0 = std::clamp(static_cast<int>(std::lround(centre * h)) - box_h / 2, 0, h - box_h);
    const int x0 = w / 10;
    const int x1 = std::max(x0 + 1, w - w / 10);
    const BBox box = clamp_box({x0, y0, x1, y0 + box_h}, w, h);

    std::string family = "sans";
    if (has_word(text, "script") || has_word(text, "cursive") || has_word(text, "handwritten") ||
        has_word(text, "calligraphy")) {
      family = "script";
    } else if (has_word(text, "mono") || has_word(text, "monospace") || has_word(text, "typewriter")) {
      family = "mono";
    } else if (has_word(text, "serif") && text.find("sans-serif") == std::string::npos &&
               text.find("sans serif") == std::string::npos) {
      family = "serif";
    }
    if ((family == "sans" || family == "serif") && has_word(text, "bold")) family += "-bold";

    TextAttributes attrs{*quoted, family, font_size, named_color(text).value_or(kOpaqueBlack)};
    elements.push_back(ElementMetadata::make_text(box, std::move(attrs)));
  } else if (has_any(text, kPicture)) {
    const int side = scale_side(text, w, h);
    const BBox box = place(text, w, h, side, side);
    const Rgba a = hashed_color(rng);
    const Rgba b = hashed_color(rng);
    const double fx = 0.05 + double(rng() % 100) / 1000.0;
    const double fy = 0.05 + double(rng() % 100) / 1000.0;
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const double t = 0.5 + 0.25 * std::sin((x - box.x0) * fx) + 0.25 * std::cos((y - box.y0) * fy);
        const int num = static_cast<int>(std::lround(t * 255));
        put(px, w, x, y, {lerp(a.r, b.r, num, 255), lerp(a.g, b.g, num, 255), lerp(a.b, b.b, num, 255), 255});
      }
    }
    elements.push_back(ElementMetadata::make_image(box, std::string("procedural texture")));
  } else {
    const int side = scale_side(text, w, h);
    const bool rect = has_any(text, kRect);
    const BBox box = place(text, w, h, side, rect ? std::max(1, side / 2) : side);
    const Rgba fill = named_color(text).value_or(hashed_color(rng));
    const double cx = (box.x0 + box.x1) / 2.0;
    const double cy = (box.y0 + box.y1) / 2.0;
    const double rx = box.width() / 2.0;
    const double ry = box.height() / 2.0;
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        if (rect || dx * dx + dy * dy <= 1.0) put(px, w, x, y, fill);
      }
    }
    elements.push_back(ElementMetadata::make_image(box, std::string(rect ? "filled rectangle" : "filled ellipse")));
  }

  // Drift outside every element box: a decoder never reproduces the rest of
  // the canvas exactly.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool inside = std::any_of(elements.begin(), elements.end(),
                                      [&](const ElementMetadata& e) { return e.bbox.contains(x, y); });
      if (inside) continue;
      const std::uint64_t v = mix(key ^ (static_cast<std::uint64_t>(y) * w + x));
      auto* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) {
        const int delta = static_cast<int>((v >> (c * 8)) % 7) - 3;
        p[c] = static_cast<std::uint8_t>(std::clamp(p[c] + delta, 0, 255));
      }
    }
  }

  return {Canvas(w, h, std::move(px)), std::move(elements)};
}

}  // namespace sledge
