#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sledge/canvas.hpp"

namespace sledge {

/// Binary single-channel raster; every value is 0 or 1.
class Mask {
 public:
  Mask(int width, int height);  // all zeros
  /// Throws validation if any value is not 0/1, dimension_mismatch on bad length.
  Mask(int width, int height, std::vector<std::uint8_t> values);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) {
    values_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  std::span<const std::uint8_t> values() const { return values_; }
  std::int64_t count() const;
  bool empty() const { return count() == 0; }
  bool same_size(const Mask& o) const { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> values_;
};

struct MaskCandidate {
  Mask mask;
  double score = 0.0;
};

struct CompositorConfig {
  /// Minimum IoU a refiner candidate needs to replace the coarse bbox mask.
  double selection_threshold = 0.25;
  /// Dilation radius; negative means "derive from canvas size".
  int dilation_radius = -1;
};

/// 5 px at 1024 on the longer side, scaled proportionally.
int default_dilation_radius(int width, int height);

/// Union of the boxes. Throws empty_region for an empty list and range for a
/// box outside (width, height).
Mask bbox_mask(std::span<const BBox> boxes, int width, int height);

/// |a & b| / |a | b|; two empty masks score 1.
double iou(const Mask& a, const Mask& b);

/// Scores each mask against `reference` with `iou`.
std::vector<MaskCandidate> score_candidates(const Mask& reference, std::span<const Mask> masks);

/// Highest-scoring candidate if it reaches `threshold`, else `reference`.
/// Ties go to the lowest index.
Mask select_candidate(const Mask& reference, std::span<const MaskCandidate> candidates,
                      double threshold);

/// Square structuring element of side 2*radius+1.
Mask dilate(const Mask& mask, int radius);

/// base where mask = 0, edited where mask = 1.
Canvas blend(const Canvas& base, const Canvas& edited, const Mask& mask);

/// `edited` where mask = 1, transparent elsewhere.
Canvas restrict_to_mask(const Canvas& edited, const Mask& mask);

}  // namespace sledge
