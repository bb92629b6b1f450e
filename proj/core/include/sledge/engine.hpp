#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "sledge/backends.hpp"
#include "sledge/compositor.hpp"
#include "sledge/document.hpp"
#include "sledge/text.hpp"

namespace sledge {

struct StepRequest {
  std::string instruction;
  std::optional<Canvas> asset;
  std::uint64_t seed = 0;
  std::optional<int> dilation_radius;
  bool refine = true;
};

struct StepOutcome {
  StepRecord record;
  Canvas canvas_after;
  Warnings warnings;
};

/// Runs one instruction through generate -> parse -> mask -> refine ->
/// dilate -> layer extraction, then pushes the record. On any error the
/// session is left untouched.
class StepEngine {
 public:
  StepEngine(std::shared_ptr<Generator> generator, std::shared_ptr<MaskRefiner> refiner,
             const FontRegistry& fonts, CompositorConfig config = {});

  StepOutcome apply_step(Session& session, const StepRequest& request) const;

  /// Same as apply_step; requires an asset.
  StepOutcome insert_asset_step(Session& session, const StepRequest& request) const;

  const FontRegistry& fonts() const { return fonts_; }
  const CompositorConfig& config() const { return config_; }

 private:
  std::shared_ptr<Generator> generator_;
  std::shared_ptr<MaskRefiner> refiner_;
  const FontRegistry& fonts_;
  CompositorConfig config_;
};

/// Leading/trailing whitespace removed.
std::string trim(std::string_view s);

}  // namespace sledge
