#include "sledge/engine.hpp"

#include <algorithm>

namespace sledge {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

StepEngine::StepEngine(std::shared_ptr<Generator> generator, std::shared_ptr<MaskRefiner> refiner,
                       const FontRegistry& fonts, CompositorConfig config)
    : generator_(std::move(generator)), refiner_(std::move(refiner)), fonts_(fonts), config_(config) {
  if (!generator_) throw Error(ErrorCode::validation, "step engine needs a generator");
}

StepOutcome StepEngine::apply_step(Session& session, const StepRequest& request) const {
  const std::string instruction = trim(request.instruction);
  if (instruction.empty()) throw Error(ErrorCode::validation, "instruction is empty");
  if (request.asset && (request.asset->width() <= 0 || request.asset->height() <= 0)) {
    throw Error(ErrorCode::validation, "asset has no pixels");
  }

  StepOutcome out{StepRecord{}, new_canvas(1, 1, kTransparent), {}};
  const Canvas before = session.observable_canvas(fonts_);
  GeneratorResult result = generator_->generate({before, instruction, request.asset, request.seed});
  if (!result.edited_canvas.same_size(before)) {
    throw Error(ErrorCode::protocol, "generator changed the canvas size");
  }
  if (result.elements.empty()) throw Error(ErrorCode::protocol, "generator returned no elements");

  StepRecord record;
  record.instruction = instruction;
  if (request.asset) record.asset_ref = "sha256:" + digest(*request.asset);
  record.elements = std::move(result.elements);

  std::vector<BBox> image_boxes;
  for (std::size_t i = 0; i < record.elements.size(); ++i) {
    const auto& e = record.elements[i];
    validate_element(e, i, ErrorCode::validation);
    if (!e.bbox.within(before.width(), before.height())) {
      throw Error(ErrorCode::validation, "element " + std::to_string(i) + ": bbox " + to_string(e.bbox) +
                                             " exceeds the canvas");
    }
    if (e.kind == ElementKind::image) image_boxes.push_back(e.bbox);
  }

  Canvas after = before;
  if (!image_boxes.empty()) {
    const Mask coarse = bbox_mask(image_boxes, before.width(), before.height());
    Mask selected = coarse;
    if (request.refine && refiner_) {
      auto proposals = refiner_->refine(before, result.edited_canvas, coarse, &out.warnings);
      std::erase_if(proposals.candidates, [&](const Mask& m) {
        if (m.same_size(coarse)) return false;
        out.warnings.push_back("dropped a refiner mask of the wrong size");
        return true;
      });
      const auto scored = score_candidates(coarse, proposals.candidates);
      selected = select_candidate(coarse, scored, config_.selection_threshold);
    }
    int radius = request.dilation_radius.value_or(config_.dilation_radius);
    if (radius < 0) radius = default_dilation_radius(before.width(), before.height());
    Mask mask = dilate(selected, radius);
    record.image_layer = restrict_to_mask(result.edited_canvas, mask);
    after = blend(before, *record.image_layer, mask);
    record.mask = std::move(mask);
  }

  // Commit on a copy so a rejected record leaves the session untouched.
  Session next = session;
  next.push_step(record);
  record.index = next.cursor() - 1;

  // Same fold flatten() performs, continued from the observable canvas.
  for (const auto& e : record.elements) {
    if (e.kind == ElementKind::text) after = render_text(after, e, fonts_, &out.warnings);
  }

  session = std::move(next);
  out.record = std::move(record);
  out.canvas_after = std::move(after);
  return out;
}

StepOutcome StepEngine::insert_asset_step(Session& session, const StepRequest& request) const {
  if (!request.asset) throw Error(ErrorCode::validation, "insert_asset_step needs an asset");
  return apply_step(session, request);
}

}  // namespace sledge
