#include "sledge/backends.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <functional>
#include <json.hpp>
#include <thread>

#include "sledge/image_io.hpp"

namespace sledge {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& url, std::string_view role) {
  if (url.empty()) throw Error(ErrorCode::backend_transport, std::string(role) + ": no URL configured");
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::validation, std::string(role) + ": URL needs a scheme: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  if (slash != std::string::npos) {
    ep.prefix = url.substr(slash);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  }
  return ep;
}

using Send = std::function<httplib::Result(httplib::Client&, const std::string& path)>;

// Bounded retry with exponential backoff. Transport failures and 5xx are
// retried; 4xx is the caller's fault and is not.
std::string call_remote(const RemoteOptions& options, std::string_view role, const std::string& path,
                        const Send& send) {
  const Endpoint ep = split_url(options.base_url, role);
  std::string last;
  for (int attempt = 0; attempt <= std::max(0, options.retries); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options.backoff * (1 << (attempt - 1)));
    httplib::Client client(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!options.api_key.empty()) client.set_bearer_token_auth(options.api_key);

    auto res = send(client, ep.prefix + path);
    if (!res) {
      last = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw Error(ErrorCode::protocol, std::string(role) + ": HTTP " + std::to_string(res->status) + ": " +
                                           res->body.substr(0, 200));
    }
    return res->body;
  }
  throw Error(ErrorCode::backend_transport,
              std::string(role) + ": " + last + " after " + std::to_string(options.retries + 1) + " attempts");
}

std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower_copy(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// "Image1", "image 2", optionally followed by a period.
std::optional<int> image_label(std::string_view reply) {
  std::string s = lower_copy(trim_copy(reply));
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s.rfind("image", 0) != 0) return std::nullopt;
  s.erase(0, 5);
  if (!s.empty() && s.front() == ' ') s.erase(0, 1);
  if (s.size() != 1 || s[0] < '1' || s[0] > '9') return std::nullopt;
  return s[0] - '0';
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string encode_generator_reply(const GeneratorResult& result) {
  GeneratorReply reply;
  reply.elements = result.elements;
  reply.image_payload = encode_png(result.edited_canvas);
  return serialize_reply(reply);
}

GeneratorResult decode_generator_reply(std::string_view bytes, int width, int height) {
  GeneratorReply reply;
  try {
    reply = parse_reply(bytes);
  } catch (const Error& e) {
    throw Error(ErrorCode::protocol, std::string("generator reply rejected (") + std::string(to_string(e.code())) +
                                         "): " + e.what());
  }
  if (!reply.image_payload) throw Error(ErrorCode::protocol, "generator reply has no image payload");
  if (reply.elements.empty()) throw Error(ErrorCode::protocol, "generator reply has no elements");
  std::optional<Canvas> edited;
  try {
    edited = decode_png(*reply.image_payload);
  } catch (const Error& e) {
    throw Error(ErrorCode::protocol, std::string("generator image payload: ") + e.what());
  }
  if (edited->width() != width || edited->height() != height) {
    throw Error(ErrorCode::protocol, "generator returned a " + std::to_string(edited->width()) + "x" +
                                         std::to_string(edited->height()) + " canvas for a " +
                                         std::to_string(width) + "x" + std::to_string(height) + " request");
  }
  return {std::move(*edited), std::move(reply.elements)};
}

GeneratorResult RemoteGenerator::generate(const GeneratorRequest& request) {
  nlohmann::json body{{"instruction", request.instruction}, {"seed", request.seed}};
  httplib::MultipartFormDataItems items = {
      {"canvas", encode_png(request.canvas), "canvas.png", "image/png"},
      {"request", body.dump(), "", "application/json"},
  };
  if (request.asset) items.push_back({"asset", encode_png(*request.asset), "asset.png", "image/png"});
  const std::string reply = call_remote(options_, "generator", "/v1/generate",
                                        [&](httplib::Client& c, const std::string& path) {
                                          return c.Post(path, items);
                                        });
  return decode_generator_reply(reply, request.canvas.width(), request.canvas.height());
}

// ---------------------------------------------------------------------------

MaskRefinerResult ComponentRefiner::refine(const Canvas& before, const Canvas& edited, const Mask& bbox_mask,
                                           Warnings*) {
  const int w = before.width();
  const int h = before.height();
  if (!before.same_size(edited) || bbox_mask.width() != w || bbox_mask.height() != h) {
    throw Error(ErrorCode::dimension_mismatch, "refiner inputs differ in size");
  }
  const auto a = before.pixels();
  const auto b = edited.pixels();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> changed(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int d = 0;
    for (int c = 0; c < 4; ++c) d += std::abs(int(a[i * 4 + c]) - int(b[i * 4 + c]));
    changed[i] = d >= threshold_ ? 1 : 0;
  }

  MaskRefinerResult out;
  std::vector<std::int32_t> label(n, -1);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> members;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!changed[seed] || label[seed] >= 0) continue;
    const auto id = static_cast<std::int32_t>(out.candidates.size() + 1);
    members.clear();
    stack.assign(1, seed);
    label[seed] = id;
    bool touches = false;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      touches = touches || bbox_mask.at(x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (changed[q] && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    if (!touches) {
      for (auto p : members) label[p] = 0;  // visited, not kept
      continue;
    }
    Mask m(w, h);
    for (auto p : members) m.set(static_cast<int>(p % w), static_cast<int>(p / w), true);
    out.candidates.push_back(std::move(m));
  }
  return out;
}

MaskRefinerResult RemoteRefiner::refine(const Canvas&, const Canvas& edited, const Mask& bbox_mask,
                                        Warnings* warnings) {
  auto degrade = [&](const std::string& why) {
    if (warnings != nullptr) warnings->push_back("mask refiner unavailable, using the box mask: " + why);
    return MaskRefinerResult{};
  };
  try {
    httplib::MultipartFormDataItems items = {
        {"canvas", encode_png(edited), "canvas.png", "image/png"},
        {"mask", encode_mask_png(bbox_mask), "mask.png", "image/png"},
    };
    const std::string body = call_remote(options_, "refiner", "/v1/refine",
                                         [&](httplib::Client& c, const std::string& path) {
                                           return c.Post(path, items);
                                         });
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("masks") || !j["masks"].is_array()) {
      return degrade("reply is not {\"masks\": [...]}");
    }
    MaskRefinerResult out;
    for (const auto& m : j["masks"]) {
      if (!m.is_string()) return degrade("mask entry is not a string");
      Mask mask = decode_mask_png(base64_decode(m.get<std::string>()));
      if (!mask.same_size(bbox_mask)) return degrade("mask size differs from the canvas");
      out.candidates.push_back(std::move(mask));
    }
    return out;
  } catch (const Error& e) {
    return degrade(e.what());
  }
}

// ---------------------------------------------------------------------------

ScriptedModel::ScriptedModel(std::vector<Entry> entries) {
  for (auto& e : entries) add(std::move(e));
}

ScriptedModel::ScriptedModel(ScriptedModel&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  entries_ = std::move(other.entries_);
  cursors_ = std::move(other.cursors_);
  calls_ = other.calls_;
}

ScriptedModel ScriptedModel::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCode::fixture, "fixture must be {\"entries\": [...]}");
  }
  ScriptedModel model;
  std::size_t i = 0;
  for (const auto& item : j["entries"]) {
    const std::string where = "fixture entry " + std::to_string(i++);
    if (!item.is_object()) throw Error(ErrorCode::fixture, where + " is not an object");
    for (const auto& [k, _] : item.items()) {
      if (k != "template" && k != "attachments" && k != "match" && k != "replies") {
        throw Error(ErrorCode::fixture, where + ": unknown key \"" + k + "\"");
      }
    }
    try {
      Entry e;
      e.template_id = item.at("template").get<std::string>();
      if (item.contains("attachments")) e.attachments = item["attachments"].get<std::vector<std::string>>();
      if (item.contains("match")) e.match = item["match"].get<std::map<std::string, std::string>>();
      e.replies = item.at("replies").get<std::vector<std::string>>();
      model.add(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::fixture, where + ": " + ex.what());
    }
  }
  return model;
}

ScriptedModel ScriptedModel::from_file(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

void ScriptedModel::add(Entry entry) {
  if (entry.replies.empty()) {
    throw Error(ErrorCode::fixture, "fixture entry for " + entry.template_id + " has no replies");
  }
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
  cursors_.push_back(0);
}

std::string ScriptedModel::complete(const ModelQuery& query) {
  std::vector<std::string> digests;
  digests.reserve(query.attachments.size());
  for (const auto& c : query.attachments) digests.push_back(digest(c));

  std::lock_guard lock(mutex_);
  ++calls_;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    if (e.template_id != query.template_id) continue;
    if (e.attachments && *e.attachments != digests) continue;
    const bool subs_match = std::all_of(e.match.begin(), e.match.end(), [&](const auto& kv) {
      auto it = query.substitutions.find(kv.first);
      return it != query.substitutions.end() && it->second == kv.second;
    });
    if (!subs_match) continue;
    const std::size_t k = std::min(cursors_[i], e.replies.size() - 1);
    ++cursors_[i];
    return e.replies[k];
  }
  std::string msg = "no fixture entry for template " + query.template_id;
  if (!digests.empty()) {
    msg += " with attachments [";
    for (std::size_t i = 0; i < digests.size(); ++i) msg += (i ? ", " : "") + digests[i].substr(0, 12);
    msg += "]";
  }
  throw Error(ErrorCode::fixture, msg);
}

std::size_t ScriptedModel::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::string RemoteModel::complete(const ModelQuery& query) {
  nlohmann::json body{{"template_id", query.template_id}, {"prompt", query.prompt}, {"images", nlohmann::json::array()}};
  for (const auto& c : query.attachments) body["images"].push_back(base64_encode(encode_png(c)));
  const std::string payload = body.dump();
  const std::string reply = call_remote(options_, "judge", "/v1/judge",
                                        [&](httplib::Client& c, const std::string& path) {
                                          return c.Post(path, payload, "application/json");
                                        });
  const auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::protocol, "judge reply is not {\"text\": \"...\"}");
  }
  return j["text"].get<std::string>();
}

// ---------------------------------------------------------------------------

std::optional<JudgeVerdict> parse_verdict(ReplyKind kind, std::string_view reply) {
  JudgeVerdict v;
  v.kind = kind;
  v.raw = std::string(reply);
  switch (kind) {
    case ReplyKind::likert: {
      const std::string s = trim_copy(reply);
      if (s.size() != 1 || s[0] < '1' || s[0] > '5') return std::nullopt;
      v.likert = s[0] - '0';
      return v;
    }
    case ReplyKind::choice_pair: {
      const auto label = image_label(reply);
      if (!label || *label > 2) return std::nullopt;
      v.image_label = *label;
      v.choice = *label == 1 ? Choice::first : Choice::second;
      return v;
    }
    case ReplyKind::choice_quad: {
      // Images 1-2 show the first edit, 3-4 the second; the template asks for
      // Image1 or Image3 but naming the "after" image is accepted too.
      const auto label = image_label(reply);
      if (!label || *label > 4) return std::nullopt;
      v.image_label = *label;
      v.choice = *label <= 2 ? Choice::first : Choice::second;
      return v;
    }
    case ReplyKind::yes_no: {
      std::string s = lower_copy(trim_copy(reply));
      if (!s.empty() && s.back() == '.') s.pop_back();
      if (s == "yes") {
        v.yes = true;
      } else if (s == "no") {
        v.yes = false;
      } else {
        return std::nullopt;
      }
      return v;
    }
    case ReplyKind::free_text:
      return v;
  }
  return std::nullopt;
}

JudgeVerdict judge(ModelClient& model, const JudgeQuery& query) {
  const PromptTemplate& tmpl = prompt_template(query.template_id);
  if (tmpl.image_arity >= 0 && static_cast<int>(query.attachments.size()) != tmpl.image_arity) {
    throw Error(ErrorCode::arity, "template " + tmpl.id + " takes " + std::to_string(tmpl.image_arity) +
                                      " images, got " + std::to_string(query.attachments.size()));
  }
  ModelQuery mq{tmpl.id, render_prompt(tmpl, query.substitutions), query.attachments, query.substitutions};
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    last = model.complete(mq);
    if (auto v = parse_verdict(tmpl.reply, last)) return *v;
  }
  throw Error(ErrorCode::protocol, "template " + tmpl.id + ": reply \"" + last.substr(0, 80) +
                                       "\" does not conform after one retry");
}

// ---------------------------------------------------------------------------

Backends backends_from_env() {
  Backends b;
  const std::string kind = env("SLEDGE_BACKEND") ? env("SLEDGE_BACKEND") : "mock";
  auto remote = [](const char* url_var) {
    RemoteOptions o;
    if (const char* u = env(url_var)) o.base_url = u;
    if (const char* t = env("SLEDGE_TIMEOUT_MS")) o.timeout = std::chrono::milliseconds(std::atoll(t));
    return o;
  };

  if (kind == "mock") {
    b.generator = std::make_shared<MockGenerator>();
  } else if (kind == "remote") {
    if (!env("SLEDGE_GENERATOR_URL")) {
      throw Error(ErrorCode::validation, "SLEDGE_BACKEND=remote needs SLEDGE_GENERATOR_URL");
    }
    b.generator = std::make_shared<RemoteGenerator>(remote("SLEDGE_GENERATOR_URL"));
  } else {
    throw Error(ErrorCode::validation, "SLEDGE_BACKEND must be mock or remote, got " + kind);
  }

  std::string refiner = env("SLEDGE_REFINER") ? env("SLEDGE_REFINER") : "";
  if (refiner.empty()) refiner = env("SLEDGE_REFINER_URL") ? "remote" : "null";
  if (refiner == "null") {
    b.refiner = std::make_shared<NullRefiner>();
  } else if (refiner == "components") {
    b.refiner = std::make_shared<ComponentRefiner>();
  } else if (refiner == "remote") {
    b.refiner = std::make_shared<RemoteRefiner>(remote("SLEDGE_REFINER_URL"));
  } else {
    throw Error(ErrorCode::validation, "SLEDGE_REFINER must be null, components or remote");
  }

  if (const char* fixture = env("SLEDGE_JUDGE_FIXTURE")) {
    b.model = std::make_shared<ScriptedModel>(ScriptedModel::from_file(fixture));
  } else if (env("SLEDGE_JUDGE_URL")) {
    auto o = remote("SLEDGE_JUDGE_URL");
    if (const char* key = env("SLEDGE_JUDGE_API_KEY")) o.api_key = key;
    b.model = std::make_shared<RemoteModel>(o);
  } else {
    b.model = std::make_shared<ScriptedModel>();
  }
  return b;
}

}  // namespace sledge
