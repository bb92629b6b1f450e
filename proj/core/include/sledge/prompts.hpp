#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sledge {

/// How a model reply to a template must be parsed.
enum class ReplyKind {
  likert,       // a single integer 1..5
  choice_pair,  // Image1 | Image2
  choice_quad,  // Image1..Image4, {1,2} first pair, {3,4} second pair
  yes_no,
  free_text,
};

struct PromptTemplate {
  std::string id;
  std::string text;
  std::vector<std::string> placeholders;  // e.g. "<theme>"
  int image_arity = 0;
  ReplyKind reply = ReplyKind::free_text;
  std::string digest;  // sha256 of `text`
};

/// Looks up a registered template. Throws not_found.
const PromptTemplate& prompt_template(std::string_view id);
std::vector<std::string> prompt_template_ids();

/// Replaces every placeholder. Throws validation when a substitution is
/// missing or an unknown key is supplied.
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& substitutions);

namespace prompt_ids {
inline constexpr std::string_view kBenchmarkInstructions = "benchmark-instructions-v1";
inline constexpr std::string_view kInstructionFilter = "instruction-filter-v1";
inline constexpr std::string_view kThemeAbsolute = "theme-absolute-v1";
inline constexpr std::string_view kAestheticAbsolute = "aesthetic-absolute-v1";
inline constexpr std::string_view kEditAbsolute = "edit-absolute-v1";
inline constexpr std::string_view kThemeComparative = "theme-comparative-v1";
inline constexpr std::string_view kAestheticComparative = "aesthetic-comparative-v1";
inline constexpr std::string_view kEditComparative = "edit-comparative-v1";
inline constexpr std::string_view kElementOrder = "element-order-v1";
inline constexpr std::string_view kThemeList = "theme-list-v1";
}  // namespace prompt_ids

}  // namespace sledge
