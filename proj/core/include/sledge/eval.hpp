#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sledge/backends.hpp"
#include "sledge/canvas.hpp"

namespace sledge::eval {

enum class Axis { theme_adherence, aesthetic_quality, edit_compliance };

std::string_view to_string(Axis axis);
Axis parse_axis(std::string_view text);

/// Images per axis: theme adherence and aesthetics take the final design;
/// edit compliance takes (before, after). Theme / instruction travel as text.
struct EvalItem {
  std::string id;
  Axis axis = Axis::aesthetic_quality;
  std::vector<Canvas> images;
  std::string theme;
  std::string instruction;
};

/// Throws arity when the attachments or text fields do not fit the axis.
void validate_item(const EvalItem& item);

enum class ItemStatus { ok, invalid, errored };
std::string_view to_string(ItemStatus s);

struct AbsoluteOutcome {
  ItemStatus status = ItemStatus::ok;
  int likert = 0;
  std::vector<std::string> replies;
};

/// One Likert judgment; strict integer reply, one retry, then invalid.
/// Transport failures mark the item errored instead of throwing.
AbsoluteOutcome score_absolute(const EvalItem& item, ModelClient& judge);

enum class Preference { a, b, tie };
std::string_view to_string(Preference p);

struct ComparativeOutcome {
  ItemStatus status = ItemStatus::ok;
  Preference verdict = Preference::tie;
  std::vector<std::string> replies;
  /// Set when the four-image template's label set had to be interpreted.
  bool label_ambiguity = false;
};

/// Judges (A, B) then (B, A). Same design picked both times wins; the same
/// slot picked both times is a tie. `a` and `b` share axis, theme, instruction.
ComparativeOutcome compare_circular(const EvalItem& a, const EvalItem& b, ModelClient& judge);

/// Verdict from the two slot choices (pass 1 shows A first, pass 2 shows B first).
Preference circular_verdict(Choice pass1, Choice pass2);

/// Greedy one-to-one matching by descending IoU; ties by (reference, predicted) index.
std::vector<std::pair<std::size_t, std::size_t>> match_boxes(const std::vector<BBox>& predicted,
                                                             const std::vector<BBox>& reference);
double box_iou(const BBox& a, const BBox& b);

/// Mean IoU over reference boxes; unmatched references count 0.
double text_iou(const std::vector<BBox>& predicted, const std::vector<BBox>& reference);

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

std::size_t levenshtein(std::string_view a, std::string_view b);  // over code points
double string_similarity(std::string_view a, std::string_view b);

/// Mean pair similarity over reference strings (cosine with an embedder,
/// normalized Levenshtein without). Pairs follow `matching` (predicted, reference)
/// when given, else index order. Embedder failure falls back with a warning.
double text_accuracy(const std::vector<std::string>& predicted,
                     const std::vector<std::string>& reference,
                     const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& matching = {},
                     TextEmbedder* embedder = nullptr, Warnings* warnings = nullptr);

struct ScoreCell {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

/// method -> axis -> cell
using ScoreTable = std::map<std::string, std::map<Axis, ScoreCell>>;

struct RawScore {
  std::string method;
  Axis axis;
  int likert;
};

ScoreTable aggregate(const std::vector<RawScore>& scores);

// ---------------------------------------------------------------------------
// Manifest-driven runs

/// Manifest JSON:
/// {"name", "seed", "judge": {"fixture": path} | {"endpoint": url},
///  "max_in_flight": 4,
///  "items": [{"id", "method", "axis", "images": [png...], "theme", "instruction"}],
///  "comparisons": [{"id", "axis", "theme", "instruction",
///                   "a": {"method", "images"}, "b": {"method", "images"}}],
///  "text_metrics": [{"id", "method", "predicted": [{"bbox", "content"}],
///                    "reference": [{"bbox", "content"}]}]}
/// Relative paths resolve against the manifest's directory.
struct RunReport {
  std::string json;   // canonical, byte-reproducible
  std::string table;  // plain text
  std::string external_metrics_json;  // image lists for FID / CLIP-aesthetic
};

RunReport run_manifest(const std::filesystem::path& manifest_path, ModelClient* judge_override = nullptr);

/// Writes report.json, report.txt and external_metrics.json into `out_dir`.
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

std::string format_table(const ScoreTable& table);

}  // namespace sledge::eval
