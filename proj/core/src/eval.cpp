#include "sledge/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json_codec.hpp"
#include "sledge/engine.hpp"
#include "sledge/image_io.hpp"

namespace fs = std::filesystem;

namespace sledge::eval {

namespace {

struct AxisTemplates {
  std::string_view absolute;
  std::string_view comparative;
};

AxisTemplates templates_for(Axis axis) {
  switch (axis) {
    case Axis::theme_adherence:
      return {prompt_ids::kThemeAbsolute, prompt_ids::kThemeComparative};
    case Axis::aesthetic_quality:
      return {prompt_ids::kAestheticAbsolute, prompt_ids::kAestheticComparative};
    case Axis::edit_compliance:
      return {prompt_ids::kEditAbsolute, prompt_ids::kEditComparative};
  }
  throw Error(ErrorCode::validation, "unknown axis");
}

std::map<std::string, std::string> substitutions_for(const EvalItem& item) {
  switch (item.axis) {
    case Axis::theme_adherence: return {{"<theme>", item.theme}};
    case Axis::aesthetic_quality: return {};
    case Axis::edit_compliance: return {{"<instruction>", item.instruction}};
  }
  return {};
}

struct Asked {
  ItemStatus status = ItemStatus::ok;
  std::optional<JudgeVerdict> verdict;
};

// Strict parse with one re-ask; transport and fixture failures mark the item errored.
Asked ask(ModelClient& model, std::string_view template_id, const std::vector<Canvas>& images,
          const std::map<std::string, std::string>& subs, std::vector<std::string>& replies) {
  const PromptTemplate& tmpl = prompt_template(template_id);
  if (tmpl.image_arity >= 0 && static_cast<int>(images.size()) != tmpl.image_arity) {
    throw Error(ErrorCode::arity, "template " + tmpl.id + " takes " + std::to_string(tmpl.image_arity) + " images");
  }
  ModelQuery q{tmpl.id, render_prompt(tmpl, subs), images, subs};
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = model.complete(q);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::backend_transport && e.code() != ErrorCode::fixture &&
          e.code() != ErrorCode::protocol) {
        throw;
      }
      replies.push_back(std::string("error: ") + e.what());
      return {ItemStatus::errored, std::nullopt};
    }
    replies.push_back(reply);
    if (auto v = parse_verdict(tmpl.reply, reply)) return {ItemStatus::ok, std::move(v)};
  }
  return {ItemStatus::invalid, std::nullopt};
}

std::vector<std::uint32_t> code_points(std::string_view s) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    std::uint32_t cp = len == 1 ? c : c & (0x7F >> len);
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t max_in_flight, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(m);
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
}

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::theme_adherence: return "theme_adherence";
    case Axis::aesthetic_quality: return "aesthetic_quality";
    case Axis::edit_compliance: return "edit_compliance";
  }
  return "unknown";
}

Axis parse_axis(std::string_view text) {
  if (text == "theme_adherence") return Axis::theme_adherence;
  if (text == "aesthetic_quality") return Axis::aesthetic_quality;
  if (text == "edit_compliance") return Axis::edit_compliance;
  throw Error(ErrorCode::validation, "unknown axis \"" + std::string(text) + "\"");
}

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::ok: return "ok";
    case ItemStatus::invalid: return "invalid";
    case ItemStatus::errored: return "errored";
  }
  return "unknown";
}

std::string_view to_string(Preference p) {
  switch (p) {
    case Preference::a: return "a";
    case Preference::b: return "b";
    case Preference::tie: return "tie";
  }
  return "unknown";
}

void validate_item(const EvalItem& item) {
  const std::size_t want = item.axis == Axis::edit_compliance ? 2 : 1;
  if (item.images.size() != want) {
    throw Error(ErrorCode::arity, "item " + item.id + ": " + std::string(to_string(item.axis)) + " takes " +
                                      std::to_string(want) + " image(s), got " + std::to_string(item.images.size()));
  }
  if (item.axis == Axis::theme_adherence && trim(item.theme).empty()) {
    throw Error(ErrorCode::arity, "item " + item.id + ": theme adherence needs a theme");
  }
  if (item.axis == Axis::edit_compliance && trim(item.instruction).empty()) {
    throw Error(ErrorCode::arity, "item " + item.id + ": edit compliance needs an instruction");
  }
}

AbsoluteOutcome score_absolute(const EvalItem& item, ModelClient& judge) {
  validate_item(item);
  AbsoluteOutcome out;
  const Asked asked = ask(judge, templates_for(item.axis).absolute, item.images, substitutions_for(item), out.replies);
  out.status = asked.status;
  if (asked.verdict) out.likert = asked.verdict->likert;
  return out;
}

Preference circular_verdict(Choice pass1, Choice pass2) {
  // Pass 1 shows (A, B); pass 2 shows (B, A).
  const bool a1 = pass1 == Choice::first;
  const bool a2 = pass2 == Choice::second;
  if (a1 && a2) return Preference::a;
  if (!a1 && !a2) return Preference::b;
  return Preference::tie;
}

ComparativeOutcome compare_circular(const EvalItem& a, const EvalItem& b, ModelClient& judge) {
  validate_item(a);
  validate_item(b);
  if (a.axis != b.axis || a.theme != b.theme || a.instruction != b.instruction) {
    throw Error(ErrorCode::validation, "compared items must share axis, theme and instruction");
  }
  ComparativeOutcome out;
  const auto tmpl = templates_for(a.axis).comparative;
  const auto subs = substitutions_for(a);
  auto images = [](const EvalItem& x, const EvalItem& y) {
    std::vector<Canvas> v = x.images;
    v.insert(v.end(), y.images.begin(), y.images.end());
    return v;
  };
  const Asked first = ask(judge, tmpl, images(a, b), subs, out.replies);
  if (first.status != ItemStatus::ok) {
    out.status = first.status;
    return out;
  }
  const Asked second = ask(judge, tmpl, images(b, a), subs, out.replies);
  if (second.status != ItemStatus::ok) {
    out.status = second.status;
    return out;
  }
  // The four-image prompt asks for Image1 or Image3; naming the "after" image is interpreted.
  out.label_ambiguity = first.verdict->kind == ReplyKind::choice_quad &&
                        (first.verdict->image_label % 2 == 0 || second.verdict->image_label % 2 == 0);
  out.verdict = circular_verdict(first.verdict->choice, second.verdict->choice);
  return out;
}

double box_iou(const BBox& a, const BBox& b) {
  const std::int64_t inter = a.intersect(b).area();
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

std::vector<std::pair<std::size_t, std::size_t>> match_boxes(const std::vector<BBox>& predicted,
                                                             const std::vector<BBox>& reference) {
  struct Cand {
    double iou;
    std::size_t r, p;
  };
  std::vector<Cand> cands;
  for (std::size_t r = 0; r < reference.size(); ++r) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const double v = box_iou(predicted[p], reference[r]);
      if (v > 0.0) cands.push_back({v, r, p});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (x.r != y.r) return x.r < y.r;
    return x.p < y.p;
  });
  std::vector<bool> used_p(predicted.size(), false);
  std::vector<bool> used_r(reference.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (used_p[c.p] || used_r[c.r]) continue;
    used_p[c.p] = used_r[c.r] = true;
    out.emplace_back(c.p, c.r);
  }
  return out;
}

double text_iou(const std::vector<BBox>& predicted, const std::vector<BBox>& reference) {
  if (reference.empty()) return predicted.empty() ? 1.0 : 0.0;
  double sum = 0.0;
  for (const auto& [p, r] : match_boxes(predicted, reference)) sum += box_iou(predicted[p], reference[r]);
  return sum / double(reference.size());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = code_points(a);
  const auto y = code_points(b);
  std::vector<std::size_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

double string_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(code_points(a).size(), code_points(b).size());
  if (longest == 0) return 1.0;
  return 1.0 - double(levenshtein(a, b)) / double(longest);
}

double text_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& reference,
                     const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& matching,
                     TextEmbedder* embedder, Warnings* warnings) {
  if (reference.empty()) return predicted.empty() ? 1.0 : 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (matching) {
    pairs = *matching;
  } else {
    for (std::size_t i = 0; i < std::min(predicted.size(), reference.size()); ++i) pairs.emplace_back(i, i);
  }
  for (const auto& [p, r] : pairs) {
    if (p >= predicted.size() || r >= reference.size()) throw Error(ErrorCode::range, "matching index out of range");
  }

  if (embedder != nullptr) {
    try {
      double sum = 0.0;
      for (const auto& [p, r] : pairs) {
        const auto u = embedder->embed(predicted[p]);
        const auto v = embedder->embed(reference[r]);
        if (u.size() != v.size() || u.empty()) throw Error(ErrorCode::protocol, "embedding sizes differ");
        double dot = 0, nu = 0, nv = 0;
        for (std::size_t k = 0; k < u.size(); ++k) {
          dot += u[k] * v[k];
          nu += u[k] * u[k];
          nv += v[k] * v[k];
        }
        sum += (nu == 0 || nv == 0) ? 0.0 : dot / std::sqrt(nu * nv);
      }
      return sum / double(reference.size());
    } catch (const std::exception& e) {
      if (warnings != nullptr) warnings->push_back(std::string("embedder failed, using string similarity: ") + e.what());
    }
  }
  double sum = 0.0;
  for (const auto& [p, r] : pairs) sum += string_similarity(predicted[p], reference[r]);
  return sum / double(reference.size());
}

ScoreTable aggregate(const std::vector<RawScore>& scores) {
  std::map<std::string, std::map<Axis, std::vector<int>>> groups;
  for (const auto& s : scores) groups[s.method][s.axis].push_back(s.likert);
  ScoreTable table;
  for (const auto& [method, axes] : groups) {
    for (const auto& [axis, values] : axes) {
      ScoreCell cell;
      cell.count = values.size();
      double sum = 0.0;
      for (int v : values) sum += v;
      cell.mean = sum / double(values.size());
      double sq = 0.0;
      for (int v : values) sq += (v - cell.mean) * (v - cell.mean);
      cell.stddev = std::sqrt(sq / double(values.size()));
      table[method][axis] = cell;
    }
  }
  return table;
}

std::string format_table(const ScoreTable& table) {
  static constexpr Axis kAxes[] = {Axis::theme_adherence, Axis::aesthetic_quality, Axis::edit_compliance};
  std::size_t width = 6;
  for (const auto& [m, _] : table) width = std::max(width, m.size());
  std::ostringstream o;
  o << std::left << std::setw(static_cast<int>(width) + 2) << "method";
  for (Axis a : kAxes) o << std::setw(26) << to_string(a);
  o << "\n";
  for (const auto& [method, axes] : table) {
    o << std::setw(static_cast<int>(width) + 2) << method;
    for (Axis a : kAxes) {
      auto it = axes.find(a);
      o << std::setw(26)
        << (it == axes.end() ? std::string("-")
                             : fixed(it->second.mean, 2) + " +/- " + fixed(it->second.stddev, 2) + " (n=" +
                                   std::to_string(it->second.count) + ")");
    }
    o << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------

RunReport run_manifest(const fs::path& manifest_path, ModelClient* judge_override) {
  const auto j = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::validation, "manifest is not a JSON object");
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? base / p : fs::path(p); };

  std::shared_ptr<ModelClient> owned;
  ModelClient* judge = judge_override;
  if (judge == nullptr) {
    const auto& cfg = j.contains("judge") ? j["judge"] : nlohmann::json::object();
    if (cfg.contains("fixture")) {
      owned = std::make_shared<ScriptedModel>(ScriptedModel::from_file(resolve(cfg["fixture"].get<std::string>())));
    } else if (cfg.contains("endpoint")) {
      RemoteOptions o;
      o.base_url = cfg["endpoint"].get<std::string>();
      if (const char* key = std::getenv("SLEDGE_JUDGE_API_KEY")) o.api_key = key;
      owned = std::make_shared<RemoteModel>(o);
    } else {
      throw Error(ErrorCode::validation, "manifest needs judge.fixture or judge.endpoint");
    }
    judge = owned.get();
  }
  const std::size_t in_flight = j.value("max_in_flight", std::size_t{4});

  std::map<std::string, Canvas> image_cache;
  auto load_images = [&](const nlohmann::json& list, std::vector<std::string>& paths) {
    std::vector<Canvas> out;
    for (const auto& p : list) {
      const std::string rel = p.get<std::string>();
      paths.push_back(rel);
      auto it = image_cache.find(rel);
      if (it == image_cache.end()) it = image_cache.emplace(rel, decode_png(read_file(resolve(rel)))).first;
      out.push_back(it->second);
    }
    return out;
  };

  detail::ordered_json report;
  std::set<std::string> used_templates;
  std::map<std::string, std::vector<std::string>> final_images;  // method -> design images

  struct Scored {
    std::string method;
    EvalItem item;
    std::vector<std::string> paths;
    AbsoluteOutcome outcome;
  };
  std::vector<Scored> scored;
  try {
    for (const auto& it : j.value("items", nlohmann::json::array())) {
      Scored s;
      s.method = it.at("method").get<std::string>();
      s.item.id = it.at("id").get<std::string>();
      s.item.axis = parse_axis(it.at("axis").get<std::string>());
      s.item.images = load_images(it.at("images"), s.paths);
      s.item.theme = it.value("theme", "");
      s.item.instruction = it.value("instruction", "");
      validate_item(s.item);
      used_templates.insert(std::string(templates_for(s.item.axis).absolute));
      final_images[s.method].push_back(s.paths.back());
      scored.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("manifest items: ") + e.what());
  }
  parallel_for(scored.size(), in_flight, [&](std::size_t k) { scored[k].outcome = score_absolute(scored[k].item, *judge); });

  struct Compared {
    std::string id, method_a, method_b;
    EvalItem a, b;
    ComparativeOutcome outcome;
  };
  std::vector<Compared> compared;
  try {
    for (const auto& c : j.value("comparisons", nlohmann::json::array())) {
      Compared x;
      x.id = c.at("id").get<std::string>();
      const Axis axis = parse_axis(c.at("axis").get<std::string>());
      for (auto* side : {&x.a, &x.b}) {
        side->id = x.id;
        side->axis = axis;
        side->theme = c.value("theme", "");
        side->instruction = c.value("instruction", "");
      }
      std::vector<std::string> ignored;
      x.method_a = c.at("a").at("method").get<std::string>();
      x.method_b = c.at("b").at("method").get<std::string>();
      x.a.images = load_images(c.at("a").at("images"), ignored);
      x.b.images = load_images(c.at("b").at("images"), ignored);
      validate_item(x.a);
      validate_item(x.b);
      used_templates.insert(std::string(templates_for(axis).comparative));
      compared.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("manifest comparisons: ") + e.what());
  }
  parallel_for(compared.size(), in_flight,
               [&](std::size_t k) { compared[k].outcome = compare_circular(compared[k].a, compared[k].b, *judge); });

  report["name"] = j.value("name", "");
  report["seed"] = j.value("seed", 0);
  report["templates"] = detail::ordered_json::object();
  for (const auto& id : used_templates) report["templates"][id] = prompt_template(id).digest;

  std::vector<RawScore> raw;
  std::size_t invalid = 0, errored = 0;
  report["items"] = detail::ordered_json::array();
  for (const auto& s : scored) {
    detail::ordered_json r;
    r["id"] = s.item.id;
    r["method"] = s.method;
    r["axis"] = std::string(to_string(s.item.axis));
    r["attachments"] = detail::ordered_json::array();
    for (const auto& img : s.item.images) r["attachments"].push_back(digest(img));
    r["status"] = std::string(to_string(s.outcome.status));
    r["likert"] = s.outcome.status == ItemStatus::ok ? detail::ordered_json(s.outcome.likert) : detail::ordered_json(nullptr);
    r["replies"] = s.outcome.replies;
    report["items"].push_back(std::move(r));
    if (s.outcome.status == ItemStatus::ok) raw.push_back({s.method, s.item.axis, s.outcome.likert});
    invalid += s.outcome.status == ItemStatus::invalid;
    errored += s.outcome.status == ItemStatus::errored;
  }

  report["comparisons"] = detail::ordered_json::array();
  detail::ordered_json tally = detail::ordered_json::object();
  for (const auto& c : compared) {
    detail::ordered_json r;
    r["id"] = c.id;
    r["axis"] = std::string(to_string(c.a.axis));
    r["a"] = c.method_a;
    r["b"] = c.method_b;
    r["status"] = std::string(to_string(c.outcome.status));
    r["verdict"] = c.outcome.status == ItemStatus::ok ? detail::ordered_json(std::string(to_string(c.outcome.verdict)))
                                                      : detail::ordered_json(nullptr);
    r["label_ambiguity"] = c.outcome.label_ambiguity;
    r["replies"] = c.outcome.replies;
    report["comparisons"].push_back(std::move(r));

    const std::string key = c.method_a + " vs " + c.method_b + " / " + std::string(to_string(c.a.axis));
    if (!tally.contains(key)) tally[key] = {{"a", 0}, {"b", 0}, {"tie", 0}, {"invalid", 0}, {"errored", 0}};
    if (c.outcome.status == ItemStatus::ok) {
      tally[key][std::string(to_string(c.outcome.verdict))] = tally[key][std::string(to_string(c.outcome.verdict))].get<int>() + 1;
    } else {
      const std::string s(to_string(c.outcome.status));
      tally[key][s] = tally[key][s].get<int>() + 1;
    }
  }
  report["comparison_tally"] = tally;

  const ScoreTable table = aggregate(raw);
  report["scores"] = detail::ordered_json::object();
  for (const auto& [method, axes] : table) {
    for (const auto& [axis, cell] : axes) {
      report["scores"][method][std::string(to_string(axis))] = {
          {"mean", cell.mean}, {"stddev", cell.stddev}, {"count", cell.count}};
    }
  }
  report["excluded"] = {{"invalid", invalid}, {"errored", errored}};

  report["text_metrics"] = detail::ordered_json::array();
  std::map<std::string, std::pair<double, double>> text_sums;
  std::map<std::string, std::size_t> text_counts;
  try {
    for (const auto& t : j.value("text_metrics", nlohmann::json::array())) {
      std::vector<BBox> pb, rb;
      std::vector<std::string> ps, rs;
      std::size_t i = 0;
      for (const auto& e : t.at("predicted")) {
        pb.push_back(detail::bbox_from_json(e.at("bbox"), i++, ErrorCode::validation));
        ps.push_back(e.at("content").get<std::string>());
      }
      i = 0;
      for (const auto& e : t.at("reference")) {
        rb.push_back(detail::bbox_from_json(e.at("bbox"), i++, ErrorCode::validation));
        rs.push_back(e.at("content").get<std::string>());
      }
      const auto matching = match_boxes(pb, rb);
      const double iou_v = text_iou(pb, rb);
      const double acc = text_accuracy(ps, rs, matching);
      const std::string method = t.at("method").get<std::string>();
      report["text_metrics"].push_back(
          {{"id", t.at("id").get<std::string>()}, {"method", method}, {"iou", iou_v}, {"accuracy", acc}});
      text_sums[method].first += iou_v;
      text_sums[method].second += acc;
      ++text_counts[method];
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("manifest text_metrics: ") + e.what());
  }

  RunReport out;
  out.table = format_table(table);
  if (!text_counts.empty()) {
    out.table += "\nmethod text_iou text_accuracy\n";
    report["text_summary"] = detail::ordered_json::object();
    for (const auto& [method, n] : text_counts) {
      const double iou_m = text_sums[method].first / double(n);
      const double acc_m = text_sums[method].second / double(n);
      report["text_summary"][method] = {{"iou", iou_m}, {"accuracy", acc_m}, {"count", n}};
      out.table += method + " " + fixed(iou_m, 4) + " " + fixed(acc_m, 4) + "\n";
    }
  }
  if (!tally.empty()) {
    out.table += "\ncomparison                        a  b  tie  invalid  errored\n";
    for (const auto& [key, t] : tally.items()) {
      out.table += key + "  " + std::to_string(t["a"].get<int>()) + "  " + std::to_string(t["b"].get<int>()) +
                   "  " + std::to_string(t["tie"].get<int>()) + "  " + std::to_string(t["invalid"].get<int>()) +
                   "  " + std::to_string(t["errored"].get<int>()) + "\n";
    }
  }
  out.json = detail::dump(report, 2) + "\n";

  detail::ordered_json ext;
  ext["note"] = "FID and CLIP-aesthetic need pretrained networks; compute them externally over these lists.";
  ext["metrics"] = {"fid", "clip_aesthetic"};
  ext["base_dir"] = fs::absolute(base).lexically_normal().string();
  ext["methods"] = detail::ordered_json::object();
  for (const auto& [method, paths] : final_images) ext["methods"][method] = paths;
  out.external_metrics_json = detail::dump(ext, 2) + "\n";
  return out;
}

void write_report(const RunReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_file(out_dir / "report.json", report.json);
  write_file(out_dir / "report.txt", report.table);
  write_file(out_dir / "external_metrics.json", report.external_metrics_json);
}

}  // namespace sledge::eval
