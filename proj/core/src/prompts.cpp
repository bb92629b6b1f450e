#include "sledge/prompts.hpp"

#include <algorithm>
#include <mutex>

#include "prompt_texts.hpp"
#include "sledge/error.hpp"
#include "sledge/image_io.hpp"

namespace sledge {

namespace {

struct Spec {
  std::string_view id;
  std::vector<std::string> placeholders;
  int image_arity;
  ReplyKind reply;
};

std::vector<PromptTemplate> build_registry() {
  const std::vector<Spec> specs = {
      {prompt_ids::kBenchmarkInstructions, {"<theme>"}, 0, ReplyKind::free_text},
      {prompt_ids::kInstructionFilter, {"<instructions>"}, 0, ReplyKind::yes_no},
      {prompt_ids::kThemeAbsolute, {"<theme>"}, 1, ReplyKind::likert},
      {prompt_ids::kAestheticAbsolute, {}, 1, ReplyKind::likert},
      {prompt_ids::kEditAbsolute, {"<instruction>"}, 2, ReplyKind::likert},
      {prompt_ids::kThemeComparative, {"<theme>"}, 2, ReplyKind::choice_pair},
      {prompt_ids::kAestheticComparative, {}, 2, ReplyKind::choice_pair},
      {prompt_ids::kEditComparative, {"<instruction>"}, 4, ReplyKind::choice_quad},
      // Element count varies per bundle; arity is checked by the caller.
      {prompt_ids::kElementOrder, {"<count>"}, -1, ReplyKind::free_text},
      {prompt_ids::kThemeList, {"<count>"}, 0, ReplyKind::free_text},
  };
  std::vector<PromptTemplate> out;
  for (const auto& spec : specs) {
    const auto text = detail::prompt_text(spec.id);
    if (!text) throw Error(ErrorCode::not_found, "prompt text missing for " + std::string(spec.id));
    PromptTemplate t;
    t.id = std::string(spec.id);
    t.text = std::string(*text);
    t.placeholders = spec.placeholders;
    t.image_arity = spec.image_arity;
    t.reply = spec.reply;
    t.digest = sha256_hex(t.text);
    out.push_back(std::move(t));
  }
  return out;
}

const std::vector<PromptTemplate>& registry() {
  static const std::vector<PromptTemplate> r = build_registry();
  return r;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view id) {
  for (const auto& t : registry()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::not_found, "no prompt template \"" + std::string(id) + "\"");
}

std::vector<std::string> prompt_template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : registry()) ids.push_back(t.id);
  return ids;
}

std::string render_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& substitutions) {
  for (const auto& [key, _] : substitutions) {
    if (std::find(tmpl.placeholders.begin(), tmpl.placeholders.end(), key) == tmpl.placeholders.end()) {
      throw Error(ErrorCode::validation, "template " + tmpl.id + " has no placeholder " + key);
    }
  }
  std::string out = tmpl.text;
  for (const auto& ph : tmpl.placeholders) {
    auto it = substitutions.find(ph);
    if (it == substitutions.end()) {
      throw Error(ErrorCode::validation, "template " + tmpl.id + " needs a value for " + ph);
    }
    // Single left-to-right pass so substituted text is never rescanned.
    std::string next;
    std::size_t pos = 0;
    while (true) {
      const std::size_t hit = out.find(ph, pos);
      if (hit == std::string::npos) break;
      next.append(out, pos, hit - pos);
      next.append(it->second);
      pos = hit + ph.size();
    }
    next.append(out, pos, std::string::npos);
    out = std::move(next);
  }
  return out;
}

}  // namespace sledge
