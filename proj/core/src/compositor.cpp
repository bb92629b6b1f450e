#include "sledge/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sledge/error.hpp"

namespace sledge {

namespace {

void require_same(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + ": " + std::to_string(w0) + "x" + std::to_string(h0) +
                    " vs " + std::to_string(w1) + "x" + std::to_string(h1));
  }
}

// One-dimensional dilation of `line` (stride-addressed) into `out`:
// out[i] = 1 iff any input in [i - r, i + r] is set.
void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t stride, int r) {
  int last_set = -1 - r;  // most recent set index at or before i + r
  // Prime with the window ahead of position 0.
  for (int j = 0; j < std::min(r, n); ++j) {
    if (in[j * stride]) last_set = j;
  }
  for (int i = 0; i < n; ++i) {
    const int ahead = i + r;
    if (ahead < n && in[ahead * stride]) last_set = ahead;
    out[i * stride] = (last_set >= i - r) ? 1 : 0;
  }
}

}  // namespace

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "mask dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(width) * height, 0);
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_dimension, "mask dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::dimension_mismatch, "mask buffer length does not match dimensions");
  }
  if (std::any_of(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw Error(ErrorCode::validation, "mask values must be 0 or 1");
  }
}

std::int64_t Mask::count() const {
  return std::accumulate(values_.begin(), values_.end(), std::int64_t{0});
}

int default_dilation_radius(int width, int height) {
  return static_cast<int>(std::lround(5.0 * std::max(width, height) / 1024.0));
}

Mask bbox_mask(std::span<const BBox> boxes, int width, int height) {
  if (boxes.empty()) throw Error(ErrorCode::empty_region, "bbox mask needs at least one box");
  Mask m(width, height);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BBox& b = boxes[i];
    if (!b.within(width, height)) {
      throw Error(ErrorCode::range, "box " + std::to_string(i) + " " + to_string(b) +
                                        " is outside " + std::to_string(width) + "x" +
                                        std::to_string(height));
    }
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) m.set(x, y, true);
    }
  }
  return m;
}

double iou(const Mask& a, const Mask& b) {
  require_same(a.width(), a.height(), b.width(), b.height(), "iou");
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += va[i] & vb[i];
    uni += va[i] | vb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<MaskCandidate> score_candidates(const Mask& reference, std::span<const Mask> masks) {
  std::vector<MaskCandidate> out;
  out.reserve(masks.size());
  for (const Mask& m : masks) out.push_back({m, iou(reference, m)});
  return out;
}

Mask select_candidate(const Mask& reference, std::span<const MaskCandidate> candidates,
                      double threshold) {
  const MaskCandidate* best = nullptr;
  for (const auto& c : candidates) {
    require_same(reference.width(), reference.height(), c.mask.width(), c.mask.height(),
                 "select_candidate");
    if (best == nullptr || c.score > best->score) best = &c;
  }
  if (best == nullptr || best->score < threshold) return reference;
  return best->mask;
}

Mask dilate(const Mask& mask, int radius) {
  if (radius < 0) throw Error(ErrorCode::validation, "dilation radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> out(rows.size());
  const auto in = mask.values();
  // The square element is separable: rows first, then columns.
  for (int y = 0; y < h; ++y) {
    const std::size_t off = static_cast<std::size_t>(y) * w;
    dilate_line(in.data() + off, rows.data() + off, w, 1, radius);
  }
  for (int x = 0; x < w; ++x) dilate_line(rows.data() + x, out.data() + x, h, w, radius);
  return Mask(w, h, std::move(out));
}

Canvas blend(const Canvas& base, const Canvas& edited, const Mask& mask) {
  require_same(base.width(), base.height(), edited.width(), edited.height(), "blend");
  require_same(base.width(), base.height(), mask.width(), mask.height(), "blend mask");
  auto px = base.copy_pixels();
  const auto src = edited.pixels();
  const auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) std::copy_n(src.data() + i * 4, 4, px.data() + i * 4);
  }
  return Canvas(base.width(), base.height(), std::move(px));
}

Canvas restrict_to_mask(const Canvas& edited, const Mask& mask) {
  require_same(edited.width(), edited.height(), mask.width(), mask.height(), "restrict_to_mask");
  std::vector<std::uint8_t> px(edited.pixels().size(), 0);
  const auto src = edited.pixels();
  const auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) std::copy_n(src.data() + i * 4, 4, px.data() + i * 4);
  }
  return Canvas(edited.width(), edited.height(), std::move(px));
}

}  // namespace sledge
