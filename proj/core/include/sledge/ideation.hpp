#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sledge/backends.hpp"
#include "sledge/canvas.hpp"
#include "sledge/metadata.hpp"

namespace sledge::ideation {

// ---------------------------------------------------------------------------
// Dataset: layered bundle -> (before, instruction, after) triplets

struct BundleElement {
  Canvas raster;  // bbox-sized, straight alpha
  BBox bbox;
  ElementKind kind = ElementKind::image;
  std::optional<TextAttributes> text;
  std::optional<std::string> caption;
  std::optional<std::string> instruction;  // supplied by the source, if any

  ElementMetadata metadata() const;
};

struct LayeredBundle {
  std::string source_id;
  Rgba background = kOpaqueWhite;
  Canvas composite;
  std::vector<BundleElement> elements;
};

/// Reads `<dir>/bundle.json`:
/// {"source_id", "width", "height", "background", "composite": "composite.png",
///  "elements": [{"kind", "bbox", "raster": "e0.png", text fields..., "instruction"?}]}
LayeredBundle load_layered_bundle(const std::filesystem::path& dir);
void save_layered_bundle(const LayeredBundle& bundle, const std::filesystem::path& dir);

struct Triplet {
  Canvas before;
  std::string instruction;
  Canvas after;
  std::vector<ElementMetadata> metadata;
};

/// Area descending, then (y0, x0), then original index.
std::vector<std::size_t> heuristic_order(const LayeredBundle& bundle);

struct OrderResult {
  std::vector<std::size_t> order;
  bool from_model = false;
  Warnings warnings;
};

/// With a model: asks for a permutation (elements then composite attached),
/// re-asks once on a bad reply, then falls back to the heuristic.
/// Without one: the heuristic.
OrderResult order_elements(const LayeredBundle& bundle, ModelClient* model);

/// Parses a JSON array of indices; nullopt unless it is a permutation of 0..n-1.
std::optional<std::vector<std::size_t>> parse_permutation(std::string_view reply, std::size_t n);

/// Triplet i: elements order[0..i) over the background -> plus order[i].
/// Throws arity when instructions.size() != elements.size().
std::vector<Triplet> build_triplets(const LayeredBundle& bundle,
                                    const std::vector<std::size_t>& order,
                                    const std::vector<std::string>& instructions);

/// Element-provided instruction, or a templated one from its metadata.
std::string default_instruction(const BundleElement& element);

/// Writes `<out>/<nnnnnn>/{before.png, after.png, instruction.txt, metadata.json}`
/// starting at `first_index`; returns the next free index.
std::size_t write_triplets(const std::vector<Triplet>& triplets,
                           const std::filesystem::path& out, std::size_t first_index);

// ---------------------------------------------------------------------------
// Benchmark: themes -> instruction sequences -> filter

struct Theme {
  std::string text;
  std::string source;  // model tag

  friend bool operator==(const Theme&, const Theme&) = default;
};

/// Lowercase, punctuation to spaces, whitespace collapsed.
std::string normalize_theme(std::string_view text);
double token_jaccard(std::string_view a, std::string_view b);

/// Drops normalized duplicates and near-duplicates (token-set Jaccard >=
/// threshold against any kept theme); first occurrence wins, order kept.
std::vector<Theme> dedup_themes(const std::vector<Theme>& themes, double jaccard_threshold = 0.6);

/// Values of a Python-style dictionary literal, in order of appearance.
std::optional<std::vector<std::string>> parse_instruction_dict(std::string_view reply);

inline constexpr std::size_t kMinInstructions = 8;
inline constexpr std::size_t kMaxInstructions = 10;

/// Sends the benchmark prompt with the theme substituted; re-asks once if the
/// reply is unparsable or outside 8..10 steps, then throws generation error.
std::vector<std::string> generate_instructions(const Theme& theme, ModelClient& model);

/// Asks the model for `count` themes (JSON array reply).
std::vector<Theme> request_themes(ModelClient& model, std::size_t count, const std::string& source);

struct FilterResult {
  std::vector<std::vector<std::string>> kept;
  std::vector<std::size_t> kept_indices;
  std::size_t judged = 0;
  double kept_fraction = 1.0;
  Warnings warnings;
};

/// Yes keeps, No drops; anything else is re-asked once, then kept with a warning.
FilterResult filter_instructions(const std::vector<std::vector<std::string>>& sequences,
                                 ModelClient& model, std::size_t max_in_flight = 4);

std::string slugify(std::string_view text);

}  // namespace sledge::ideation
