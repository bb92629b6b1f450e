#include "sledge/ideation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json_codec.hpp"
#include "sledge/engine.hpp"
#include "sledge/image_io.hpp"

namespace fs = std::filesystem;

namespace sledge::ideation {

namespace {

[[noreturn]] void corrupt(const fs::path& dir, const std::string& what) {
  throw Error(ErrorCode::corrupt_document, (dir / "bundle.json").string() + ": " + what);
}

std::string join_steps(const std::vector<std::string>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + steps[i];
  }
  return out;
}

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::istringstream in(normalize_theme(text));
  std::string word;
  while (in >> word) out.insert(word);
  return out;
}

}  // namespace

ElementMetadata BundleElement::metadata() const {
  if (kind == ElementKind::text) {
    if (!text) throw Error(ErrorCode::validation, "text element without text attributes");
    return ElementMetadata::make_text(bbox, *text);
  }
  return ElementMetadata::make_image(bbox, caption);
}

LayeredBundle load_layered_bundle(const fs::path& dir) {
  const fs::path manifest = dir / "bundle.json";
  if (!fs::exists(manifest)) throw Error(ErrorCode::not_found, "no bundle.json in " + dir.string());
  const auto j = nlohmann::json::parse(read_file(manifest), nullptr, false);
  if (j.is_discarded() || !j.is_object()) corrupt(dir, "not a JSON object");

  LayeredBundle bundle{"", kOpaqueWhite, new_canvas(1, 1, kTransparent), {}};
  int width = 0;
  int height = 0;
  try {
    bundle.source_id = j.value("source_id", dir.filename().string());
    width = j.at("width").get<int>();
    height = j.at("height").get<int>();
    if (j.contains("background")) bundle.background = parse_color(j["background"].get<std::string>());
    bundle.composite = decode_png(read_file(dir / j.at("composite").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    corrupt(dir, e.what());
  }
  if (bundle.composite.width() != width || bundle.composite.height() != height) {
    corrupt(dir, "composite size differs from width/height");
  }
  const auto& elements = j.find("elements");
  if (elements == j.end() || !elements->is_array() || elements->empty()) {
    corrupt(dir, "\"elements\" must be a non-empty array");
  }
  for (std::size_t i = 0; i < elements->size(); ++i) {
    nlohmann::json meta = (*elements)[i];
    if (!meta.is_object() || !meta.contains("raster") || !meta["raster"].is_string()) {
      corrupt(dir, "element " + std::to_string(i) + " needs a \"raster\" path");
    }
    BundleElement el{decode_png(read_file(dir / meta["raster"].get<std::string>())), {}, ElementKind::image,
                     std::nullopt, std::nullopt, std::nullopt};
    if (meta.contains("instruction")) {
      if (!meta["instruction"].is_string()) corrupt(dir, "element " + std::to_string(i) + " instruction");
      el.instruction = meta["instruction"].get<std::string>();
    }
    meta.erase("raster");
    meta.erase("instruction");
    const ElementMetadata em = detail::element_from_json(meta, i, ErrorCode::corrupt_document);
    validate_element(em, i, ErrorCode::corrupt_document);
    if (!em.bbox.within(width, height)) corrupt(dir, "element " + std::to_string(i) + " bbox exceeds the canvas");
    if (el.raster.width() != em.bbox.width() || el.raster.height() != em.bbox.height()) {
      corrupt(dir, "element " + std::to_string(i) + " raster size differs from its bbox");
    }
    el.bbox = em.bbox;
    el.kind = em.kind;
    el.text = em.text;
    el.caption = em.caption;
    bundle.elements.push_back(std::move(el));
  }
  return bundle;
}

void save_layered_bundle(const LayeredBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  detail::ordered_json j;
  j["source_id"] = bundle.source_id;
  j["width"] = bundle.composite.width();
  j["height"] = bundle.composite.height();
  j["background"] = format_color(bundle.background);
  j["composite"] = "composite.png";
  j["elements"] = detail::ordered_json::array();
  for (std::size_t i = 0; i < bundle.elements.size(); ++i) {
    const auto& el = bundle.elements[i];
    auto e = detail::element_to_json(el.metadata());
    const std::string raster = "e" + std::to_string(i) + ".png";
    e["raster"] = raster;
    if (el.instruction) e["instruction"] = *el.instruction;
    write_file(dir / raster, encode_png(el.raster));
    j["elements"].push_back(std::move(e));
  }
  write_file(dir / "composite.png", encode_png(bundle.composite));
  write_file(dir / "bundle.json", detail::dump(j, 2) + "\n");
}

std::vector<std::size_t> heuristic_order(const LayeredBundle& bundle) {
  std::vector<std::size_t> order(bundle.elements.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const BBox& ba = bundle.elements[a].bbox;
    const BBox& bb = bundle.elements[b].bbox;
    if (ba.area() != bb.area()) return ba.area() > bb.area();
    if (ba.y0 != bb.y0) return ba.y0 < bb.y0;
    if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
    return a < b;
  });
  return order;
}

std::optional<std::vector<std::size_t>> parse_permutation(std::string_view reply, std::size_t n) {
  const auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_array() || j.size() != n) return std::nullopt;
  std::vector<std::size_t> out;
  std::vector<bool> seen(n, false);
  for (const auto& v : j) {
    if (!v.is_number_integer()) return std::nullopt;
    const auto k = v.get<std::int64_t>();
    if (k < 0 || static_cast<std::size_t>(k) >= n || seen[k]) return std::nullopt;
    seen[k] = true;
    out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

OrderResult order_elements(const LayeredBundle& bundle, ModelClient* model) {
  OrderResult out;
  if (model == nullptr) {
    out.order = heuristic_order(bundle);
    return out;
  }
  const PromptTemplate& tmpl = prompt_template(prompt_ids::kElementOrder);
  ModelQuery q;
  q.template_id = tmpl.id;
  q.substitutions = {{"<count>", std::to_string(bundle.elements.size())}};
  q.prompt = render_prompt(tmpl, q.substitutions);
  for (const auto& el : bundle.elements) q.attachments.push_back(el.raster);
  q.attachments.push_back(bundle.composite);

  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    last = model->complete(q);
    if (auto p = parse_permutation(trim(last), bundle.elements.size())) {
      out.order = std::move(*p);
      out.from_model = true;
      return out;
    }
  }
  out.warnings.push_back(bundle.source_id + ": orderer reply \"" + last.substr(0, 60) +
                         "\" is not a permutation; using the area heuristic");
  out.order = heuristic_order(bundle);
  return out;
}

std::string default_instruction(const BundleElement& element) {
  if (element.instruction && !trim(*element.instruction).empty()) return trim(*element.instruction);
  if (element.kind == ElementKind::text && element.text) {
    return "Add the text \"" + element.text->content + "\" in a " + element.text->font_family + " font.";
  }
  if (element.caption && !element.caption->empty()) return "Add " + *element.caption + ".";
  return "Add an image element.";
}

std::vector<Triplet> build_triplets(const LayeredBundle& bundle, const std::vector<std::size_t>& order,
                                    const std::vector<std::string>& instructions) {
  const std::size_t n = bundle.elements.size();
  if (instructions.size() != n) {
    throw Error(ErrorCode::arity, std::to_string(instructions.size()) + " instructions for " +
                                      std::to_string(n) + " elements");
  }
  std::vector<bool> seen(n, false);
  if (order.size() != n) throw Error(ErrorCode::validation, "order is not a permutation of the elements");
  for (auto k : order) {
    if (k >= n || seen[k]) throw Error(ErrorCode::validation, "order is not a permutation of the elements");
    seen[k] = true;
  }

  std::vector<Triplet> out;
  Canvas canvas = new_canvas(bundle.composite.width(), bundle.composite.height(), bundle.background);
  for (std::size_t i = 0; i < n; ++i) {
    const BundleElement& el = bundle.elements[order[i]];
    Canvas after = composite_at(canvas, el.raster, el.bbox.x0, el.bbox.y0);
    out.push_back({canvas, instructions[order[i]], after, {el.metadata()}});
    canvas = std::move(after);
  }
  return out;
}

std::size_t write_triplets(const std::vector<Triplet>& triplets, const fs::path& out, std::size_t first_index) {
  std::size_t index = first_index;
  for (const auto& t : triplets) {
    char name[16];
    std::snprintf(name, sizeof name, "%06zu", index++);
    const fs::path dir = out / name;
    fs::create_directories(dir);
    write_file(dir / "before.png", encode_png(t.before));
    write_file(dir / "after.png", encode_png(t.after));
    write_file(dir / "instruction.txt", t.instruction + "\n");
    detail::ordered_json meta;
    meta["elements"] = detail::ordered_json::array();
    for (const auto& e : t.metadata) meta["elements"].push_back(detail::element_to_json(e));
    write_file(dir / "metadata.json", detail::dump(meta, 2) + "\n");
  }
  return index;
}

// ---------------------------------------------------------------------------

std::string normalize_theme(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : text) {
    // Bytes >= 0x80 belong to non-ASCII letters and are kept as-is.
    const bool word = std::isalnum(c) || c >= 0x80;
    if (!word) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : ta) inter += tb.count(t);
  return double(inter) / double(ta.size() + tb.size() - inter);
}

std::vector<Theme> dedup_themes(const std::vector<Theme>& themes, double jaccard_threshold) {
  std::vector<Theme> kept;
  std::vector<std::string> norms;
  for (const auto& t : themes) {
    const std::string norm = normalize_theme(t.text);
    if (norm.empty()) continue;
    const bool dup = std::any_of(norms.begin(), norms.end(), [&](const std::string& k) {
      return k == norm || token_jaccard(k, norm) >= jaccard_threshold;
    });
    if (dup) continue;
    norms.push_back(norm);
    kept.push_back(t);
  }
  return kept;
}

std::optional<std::vector<std::string>> parse_instruction_dict(std::string_view reply) {
  std::size_t i = reply.find('{');
  if (i == std::string_view::npos) return std::nullopt;
  ++i;
  auto skip = [&] {
    while (i < reply.size() && std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
  };
  // Python string literal, with adjacent literals concatenated.
  auto string_lit = [&]() -> std::optional<std::string> {
    std::string out;
    bool any = false;
    while (true) {
      skip();
      if (i >= reply.size() || (reply[i] != '\'' && reply[i] != '"')) break;
      const char q = reply[i++];
      any = true;
      while (true) {
        if (i >= reply.size()) return std::nullopt;
        const char c = reply[i++];
        if (c == q) break;
        if (c == '\n') return std::nullopt;
        if (c != '\\') {
          out += c;
          continue;
        }
        if (i >= reply.size()) return std::nullopt;
        const char e = reply[i++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '\\': case '\'': case '"': out += e; break;
          default: out += '\\'; out += e;
        }
      }
    }
    if (!any) return std::nullopt;
    return out;
  };

  std::vector<std::string> values;
  while (true) {
    skip();
    if (i >= reply.size()) return std::nullopt;
    if (reply[i] == '}') break;
    // Key: a string literal or a bare token such as an integer.
    if (reply[i] == '\'' || reply[i] == '"') {
      if (!string_lit()) return std::nullopt;
    } else {
      const std::size_t start = i;
      while (i < reply.size() && (std::isalnum(static_cast<unsigned char>(reply[i])) || reply[i] == '_')) ++i;
      if (i == start) return std::nullopt;
    }
    skip();
    if (i >= reply.size() || reply[i] != ':') return std::nullopt;
    ++i;
    auto value = string_lit();
    if (!value) return std::nullopt;
    values.push_back(trim(*value));
    skip();
    if (i < reply.size() && reply[i] == ',') {
      ++i;
      continue;
    }
    skip();
    if (i >= reply.size() || reply[i] != '}') return std::nullopt;
    break;
  }
  return values;
}

std::vector<std::string> generate_instructions(const Theme& theme, ModelClient& model) {
  if (trim(theme.text).empty()) throw Error(ErrorCode::validation, "theme is empty");
  const PromptTemplate& tmpl = prompt_template(prompt_ids::kBenchmarkInstructions);
  ModelQuery q;
  q.template_id = tmpl.id;
  q.substitutions = {{"<theme>", theme.text}};
  q.prompt = render_prompt(tmpl, q.substitutions);
  std::string why;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = model.complete(q);
    const auto steps = parse_instruction_dict(reply);
    if (!steps) {
      why = "reply is not a dictionary of instructions";
    } else if (steps->size() < kMinInstructions || steps->size() > kMaxInstructions) {
      why = "reply has " + std::to_string(steps->size()) + " steps";
    } else if (std::any_of(steps->begin(), steps->end(), [](const std::string& s) { return s.empty(); })) {
      why = "reply has an empty step";
    } else {
      return *steps;
    }
  }
  throw Error(ErrorCode::generation, "theme \"" + theme.text + "\": " + why + " after one retry");
}

std::vector<Theme> request_themes(ModelClient& model, std::size_t count, const std::string& source) {
  const PromptTemplate& tmpl = prompt_template(prompt_ids::kThemeList);
  ModelQuery q;
  q.template_id = tmpl.id;
  q.substitutions = {{"<count>", std::to_string(count)}};
  q.prompt = render_prompt(tmpl, q.substitutions);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = model.complete(q);
    const auto j = nlohmann::json::parse(trim(reply), nullptr, false);
    if (j.is_discarded() || !j.is_array()) continue;
    std::vector<Theme> out;
    bool ok = true;
    for (const auto& v : j) {
      if (!v.is_string() || trim(v.get<std::string>()).empty()) {
        ok = false;
        break;
      }
      out.push_back({trim(v.get<std::string>()), source});
    }
    if (ok) return out;
  }
  throw Error(ErrorCode::generation, "theme list reply is not a JSON array of strings after one retry");
}

FilterResult filter_instructions(const std::vector<std::vector<std::string>>& sequences, ModelClient& model,
                                 std::size_t max_in_flight) {
  const std::size_t n = sequences.size();
  std::vector<int> verdict(n, 1);  // 1 keep, 0 drop
  std::vector<std::string> notes(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        const auto v = judge(model, {std::string(prompt_ids::kInstructionFilter), {},
                                     {{"<instructions>", join_steps(sequences[k])}}});
        verdict[k] = v.yes ? 1 : 0;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::protocol) {
          notes[k] = "sequence " + std::to_string(k) + ": filter reply unusable, kept (" + e.what() + ")";
          continue;
        }
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  FilterResult out;
  out.judged = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (!notes[k].empty()) out.warnings.push_back(notes[k]);
    if (verdict[k]) {
      out.kept.push_back(sequences[k]);
      out.kept_indices.push_back(k);
    }
  }
  out.kept_fraction = n == 0 ? 1.0 : double(out.kept.size()) / double(n);
  return out;
}

std::string slugify(std::string_view text) {
  std::string out;
  for (unsigned char c : normalize_theme(text)) {
    if (std::isalnum(c)) {
      out += static_cast<char>(c);
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
    if (out.size() >= 64) break;
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "theme" : out;
}

}  // namespace sledge::ideation
