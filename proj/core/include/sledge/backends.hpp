#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sledge/canvas.hpp"
#include "sledge/compositor.hpp"
#include "sledge/error.hpp"
#include "sledge/metadata.hpp"
#include "sledge/prompts.hpp"

namespace sledge {

// ---------------------------------------------------------------------------
// Generator: F(C_t, I_t, U_t) -> (edited canvas, M_{t+1})

struct GeneratorRequest {
  Canvas canvas;
  std::string instruction;
  std::optional<Canvas> asset;
  std::uint64_t seed = 0;
};

struct GeneratorResult {
  Canvas edited_canvas;
  std::vector<ElementMetadata> elements;
};

class Generator {
 public:
  virtual ~Generator() = default;
  /// Throws backend_transport (retryable) or protocol errors.
  virtual GeneratorResult generate(const GeneratorRequest& request) = 0;
};

/// Deterministic stand-in keyed by (instruction, seed):
///  - asset present           -> image element, asset scaled into the predicted box
///  - background / gradient   -> full-canvas image element with a gradient
///  - quoted string           -> text element with that content
///  - photo/image/illustration-> image element with procedural texture
///  - anything else           -> image element with a filled shape
/// Outside the new content the edited canvas carries small pixel drift, the
/// way a diffusion decoder would, so unmasked compositing would be visible.
class MockGenerator final : public Generator {
 public:
  GeneratorResult generate(const GeneratorRequest& request) override;
};

struct RemoteOptions {
  std::string base_url;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{250};
  std::string api_key;
};

/// POST /v1/generate, multipart: `canvas` (PNG), optional `asset` (PNG),
/// `request` (JSON: instruction, seed). Reply is the design-metadata byte
/// format with the edited raster as PNG inside the image sentinel.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteOptions options) : options_(std::move(options)) {}
  GeneratorResult generate(const GeneratorRequest& request) override;

 private:
  RemoteOptions options_;
};

/// Builds the wire reply a generator service sends; used by test servers.
std::string encode_generator_reply(const GeneratorResult& result);
GeneratorResult decode_generator_reply(std::string_view bytes, int width, int height);

// ---------------------------------------------------------------------------
// Mask refiner (segmentation stand-in)

struct MaskRefinerResult {
  std::vector<Mask> candidates;
};

class MaskRefiner {
 public:
  virtual ~MaskRefiner() = default;
  /// Never throws for service loss: degrades to no candidates plus a warning.
  virtual MaskRefinerResult refine(const Canvas& before, const Canvas& edited,
                                   const Mask& bbox_mask, Warnings* warnings) = 0;
};

class NullRefiner final : public MaskRefiner {
 public:
  MaskRefinerResult refine(const Canvas&, const Canvas&, const Mask&, Warnings*) override {
    return {};
  }
};

/// Thresholds |edited - before| (sum over RGBA) and returns every
/// 8-connected component of changed pixels that touches the bbox mask.
class ComponentRefiner final : public MaskRefiner {
 public:
  explicit ComponentRefiner(int difference_threshold = 24)
      : threshold_(difference_threshold) {}
  MaskRefinerResult refine(const Canvas& before, const Canvas& edited, const Mask& bbox_mask,
                           Warnings* warnings) override;

 private:
  int threshold_;
};

/// POST /v1/refine, multipart `canvas` (edited PNG) + `mask` (PNG);
/// reply `{"masks": [base64 PNG, ...]}`.
class RemoteRefiner final : public MaskRefiner {
 public:
  explicit RemoteRefiner(RemoteOptions options) : options_(std::move(options)) {}
  MaskRefinerResult refine(const Canvas& before, const Canvas& edited, const Mask& bbox_mask,
                           Warnings* warnings) override;

 private:
  RemoteOptions options_;
};

// ---------------------------------------------------------------------------
// Language / vision model (judge, instruction writer, orderer)

struct ModelQuery {
  std::string template_id;
  std::string prompt;
  std::vector<Canvas> attachments;
  std::map<std::string, std::string> substitutions;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  /// Raw reply text. Throws backend_transport / protocol / fixture.
  virtual std::string complete(const ModelQuery& query) = 0;
};

/// Replays replies from a fixture table. An entry matches on template id,
/// optionally on attachment digests (in order) and on substitution values.
/// Each entry holds a reply list consumed one per call; the last one repeats.
///
/// Fixture JSON: {"entries": [{"template": id, "attachments": [digest...],
///                 "match": {"<theme>": "..."}, "replies": ["..."]}]}
class ScriptedModel final : public ModelClient {
 public:
  struct Entry {
    std::string template_id;
    std::optional<std::vector<std::string>> attachments;
    std::map<std::string, std::string> match;
    std::vector<std::string> replies;
  };

  ScriptedModel() = default;
  explicit ScriptedModel(std::vector<Entry> entries);
  ScriptedModel(ScriptedModel&& other) noexcept;
  static ScriptedModel from_json(std::string_view text);
  static ScriptedModel from_file(const std::filesystem::path& path);

  void add(Entry entry);
  std::string complete(const ModelQuery& query) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> cursors_;
  std::size_t calls_ = 0;
};

/// POST /v1/judge with {"template_id", "prompt", "images": [base64 PNG]}
/// -> {"text": "..."}. Sends `Authorization: Bearer <api_key>` when set.
class RemoteModel final : public ModelClient {
 public:
  explicit RemoteModel(RemoteOptions options) : options_(std::move(options)) {}
  std::string complete(const ModelQuery& query) override;

 private:
  RemoteOptions options_;
};

// ---------------------------------------------------------------------------
// Judge: template + strict reply parsing

struct JudgeQuery {
  std::string template_id;
  std::vector<Canvas> attachments;
  std::map<std::string, std::string> substitutions;
};

enum class Choice { first, second };

struct JudgeVerdict {
  ReplyKind kind = ReplyKind::likert;
  int likert = 0;
  Choice choice = Choice::first;
  int image_label = 0;  // the literal ImageN picked, for choice replies
  bool yes = false;
  std::string raw;
};

/// Strict parse of a reply for `kind`; nullopt when it does not conform.
std::optional<JudgeVerdict> parse_verdict(ReplyKind kind, std::string_view reply);

/// Renders the template, checks attachment arity, queries the model, and
/// parses the reply. A non-conforming reply is re-asked once, then protocol error.
JudgeVerdict judge(ModelClient& model, const JudgeQuery& query);

// ---------------------------------------------------------------------------

struct Backends {
  std::shared_ptr<Generator> generator;
  std::shared_ptr<MaskRefiner> refiner;
  std::shared_ptr<ModelClient> model;
};

/// SLEDGE_BACKEND=mock|remote (default mock), SLEDGE_GENERATOR_URL,
/// SLEDGE_REFINER_URL, SLEDGE_JUDGE_URL, SLEDGE_JUDGE_API_KEY,
/// SLEDGE_JUDGE_FIXTURE (scripted replies for the mock model).
Backends backends_from_env();

}  // namespace sledge
