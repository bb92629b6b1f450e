#include "sledge/bundle.hpp"

#include <random>

#include "json_codec.hpp"
#include "sledge/image_io.hpp"

namespace fs = std::filesystem;

namespace sledge {

namespace {

std::string layer_path(std::size_t i) { return "layers/step_" + std::to_string(i) + ".png"; }
std::string mask_path(std::size_t i) { return "masks/step_" + std::to_string(i) + ".png"; }

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::corrupt_document, "document.json: " + what);
}

std::string random_suffix() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::to_string(rng());
}

}  // namespace

std::string document_json(const DesignDocument& doc) {
  detail::ordered_json j;
  j["canvas_width"] = doc.canvas_width;
  j["canvas_height"] = doc.canvas_height;
  j["background"] = format_color(doc.background);
  j["theme"] = doc.theme ? detail::ordered_json(*doc.theme) : detail::ordered_json(nullptr);
  j["steps"] = detail::ordered_json::array();
  for (const auto& step : doc.steps) {
    detail::ordered_json s;
    s["index"] = step.index;
    s["instruction"] = step.instruction;
    s["asset_ref"] = step.asset_ref ? detail::ordered_json(*step.asset_ref) : detail::ordered_json(nullptr);
    s["elements"] = detail::ordered_json::array();
    for (const auto& e : step.elements) s["elements"].push_back(detail::element_to_json(e));
    s["layer"] = step.image_layer ? detail::ordered_json(layer_path(step.index)) : detail::ordered_json(nullptr);
    s["mask"] = step.mask ? detail::ordered_json(mask_path(step.index)) : detail::ordered_json(nullptr);
    j["steps"].push_back(std::move(s));
  }
  return detail::dump(j, 2) + "\n";
}

void save_bundle(const DesignDocument& doc, const fs::path& dir,
                 const std::map<std::string, std::string>& extra_files) {
  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / (target.filename().string() + ".tmp-" + random_suffix());
  const fs::path old = parent / (target.filename().string() + ".old-" + random_suffix());
  try {
    fs::create_directories(tmp);
    write_file(tmp / "document.json", document_json(doc));
    for (const auto& step : doc.steps) {
      if (step.image_layer) write_file(tmp / layer_path(step.index), encode_png(*step.image_layer));
      if (step.mask) write_file(tmp / mask_path(step.index), encode_mask_png(*step.mask));
    }
    for (const auto& [name, bytes] : extra_files) write_file(tmp / name, bytes);

    const bool had_old = fs::exists(target);
    if (had_old) fs::rename(target, old);
    fs::rename(tmp, target);
    if (had_old) fs::remove_all(old);
  } catch (const fs::filesystem_error& e) {
    std::error_code ignored;
    fs::remove_all(tmp, ignored);
    throw Error(ErrorCode::io, std::string("saving bundle: ") + e.what());
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(tmp, ignored);
    throw;
  }
}

DesignDocument load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::not_found, "no design bundle at " + dir.string());
  if (!fs::exists(dir / "document.json")) {
    throw Error(ErrorCode::not_found, "no document.json in " + dir.string());
  }
  const auto j = nlohmann::json::parse(read_file(dir / "document.json"), nullptr, false);
  if (j.is_discarded() || !j.is_object()) corrupt("not a JSON object");

  DesignDocument doc;
  try {
    doc.canvas_width = j.at("canvas_width").get<int>();
    doc.canvas_height = j.at("canvas_height").get<int>();
    doc.background = parse_color(j.at("background").get<std::string>());
    if (!j.at("theme").is_null()) doc.theme = j.at("theme").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    corrupt(e.what());
  } catch (const Error& e) {
    corrupt(e.what());
  }
  if (doc.canvas_width <= 0 || doc.canvas_height <= 0) corrupt("canvas dimensions must be positive");

  const auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array()) corrupt("\"steps\" must be an array");
  for (std::size_t i = 0; i < steps->size(); ++i) {
    const auto& s = (*steps)[i];
    StepRecord rec;
    try {
      if (s.at("index").get<std::size_t>() != i) corrupt("step indices must be contiguous from 0");
      rec.index = i;
      rec.instruction = s.at("instruction").get<std::string>();
      if (!s.at("asset_ref").is_null()) rec.asset_ref = s.at("asset_ref").get<std::string>();
      const auto& elements = s.at("elements");
      if (!elements.is_array()) corrupt("step " + std::to_string(i) + " elements must be an array");
      for (std::size_t k = 0; k < elements.size(); ++k) {
        rec.elements.push_back(detail::element_from_json(elements[k], k, ErrorCode::corrupt_document));
        validate_element(rec.elements.back(), k, ErrorCode::corrupt_document);
      }
      if (!s.at("layer").is_null()) {
        rec.image_layer = decode_png(read_file(dir / s.at("layer").get<std::string>()));
      }
      if (!s.at("mask").is_null()) {
        rec.mask = decode_mask_png(read_file(dir / s.at("mask").get<std::string>()));
      }
    } catch (const nlohmann::json::exception& e) {
      corrupt("step " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::corrupt_document) throw;
      corrupt("step " + std::to_string(i) + ": " + e.what());
    }
    if (rec.image_layer.has_value() != rec.mask.has_value()) {
      corrupt("step " + std::to_string(i) + " must have both a layer and a mask, or neither");
    }
    if ((rec.image_layer && (rec.image_layer->width() != doc.canvas_width ||
                             rec.image_layer->height() != doc.canvas_height)) ||
        (rec.mask && (rec.mask->width() != doc.canvas_width || rec.mask->height() != doc.canvas_height))) {
      corrupt("step " + std::to_string(i) + " raster does not match the canvas size");
    }
    doc.steps.push_back(std::move(rec));
  }
  return doc;
}

}  // namespace sledge
