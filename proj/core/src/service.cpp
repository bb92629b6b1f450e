#include "sledge/service.hpp"

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>
#include <thread>

#include "json_codec.hpp"
#include "sledge/bundle.hpp"
#include "sledge/image_io.hpp"

namespace fs = std::filesystem;

namespace sledge::service {

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

// Undo/redo past either end.
struct Boundary {
  std::string what;
};

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object");
  return j;
}

void only_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(ErrorCode::validation, "unknown field \"" + k + "\"");
    }
  }
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::validation, std::string("field \"") + key + "\" has the wrong type");
  }
}

std::size_t parse_index(const std::string& s, const char* what) {
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), ::isdigit)) {
    throw Error(ErrorCode::validation, std::string(what) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(std::stoul(s));
}

}  // namespace

// ---------------------------------------------------------------------------

Session load_session(const fs::path& dir, const std::string& id) {
  DesignDocument doc = load_bundle(dir);
  std::size_t cursor = doc.steps.size();
  if (fs::exists(dir / "session.json")) {
    const auto meta = nlohmann::json::parse(read_file(dir / "session.json"), nullptr, false);
    if (meta.is_discarded() || !meta.is_object() || !meta.contains("cursor") || !meta["cursor"].is_number_unsigned()) {
      throw Error(ErrorCode::corrupt_document, (dir / "session.json").string() + " is unreadable");
    }
    cursor = meta["cursor"].get<std::size_t>();
    if (cursor > doc.steps.size()) {
      throw Error(ErrorCode::corrupt_document, (dir / "session.json").string() + ": cursor beyond the steps");
    }
  }
  return Session(id, std::move(doc), cursor);
}

void save_session(const Session& session, const fs::path& dir) {
  nlohmann::ordered_json meta{{"id", session.id()}, {"cursor", session.cursor()}};
  save_bundle(session.document(), dir, {{"session.json", meta.dump(2) + "\n"}});
}

SessionStore::SessionStore(fs::path root, std::size_t capacity) : root_(std::move(root)), capacity_(capacity) {
  fs::create_directories(root_);
}

fs::path SessionStore::bundle_dir(const std::string& id) const { return root_ / (id + ".sledge"); }

void SessionStore::persist(const Session& session) const { save_session(session, bundle_dir(session.id())); }

std::shared_ptr<const Session> SessionStore::load(const std::string& id) const {
  if (!valid_id(id)) throw Error(ErrorCode::not_found, "no session \"" + id + "\"");
  const fs::path dir = bundle_dir(id);
  if (!fs::exists(dir / "document.json")) throw Error(ErrorCode::not_found, "no session \"" + id + "\"");
  return std::make_shared<const Session>(load_session(dir, id));
}

void SessionStore::touch(const std::string& id) {
  lru_.remove(id);
  lru_.push_front(id);
}

void SessionStore::evict() {
  auto it = lru_.end();
  while (slots_.size() > capacity_ && it != lru_.begin()) {
    --it;
    auto slot_it = slots_.find(*it);
    // A slot whose writer is busy stays; everything committed is already on disk.
    if (slot_it != slots_.end() && slot_it->second->writer.try_lock()) {
      slot_it->second->writer.unlock();
      slots_.erase(slot_it);
      it = lru_.erase(it);
    }
  }
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = slots_.find(id); it != slots_.end()) {
    touch(id);
    return it->second;
  }
  auto s = std::make_shared<Slot>();
  s->committed = load(id);
  slots_.emplace(id, s);
  touch(id);
  evict();
  return s;
}

std::shared_ptr<const Session> SessionStore::create(DesignDocument document) {
  auto session = std::make_shared<const Session>(new_session_id(), std::move(document));
  persist(*session);
  std::lock_guard lock(mutex_);
  auto s = std::make_shared<Slot>();
  s->committed = session;
  slots_.emplace(session->id(), s);
  touch(session->id());
  evict();
  return session;
}

std::shared_ptr<const Session> SessionStore::get(const std::string& id) {
  auto s = slot(id);
  std::lock_guard lock(mutex_);
  return s->committed;
}

std::shared_ptr<const Session> SessionStore::mutate(const std::string& id, const std::function<void(Session&)>& fn) {
  while (true) {
    auto s = slot(id);
    std::lock_guard writer(s->writer);
    std::shared_ptr<const Session> base;
    {
      std::lock_guard lock(mutex_);
      auto it = slots_.find(id);
      if (it == slots_.end() || it->second != s) continue;  // evicted meanwhile; reload
      base = s->committed;
    }
    Session next = *base;
    fn(next);
    persist(next);
    auto published = std::make_shared<const Session>(std::move(next));
    std::lock_guard lock(mutex_);
    s->committed = published;
    return published;
  }
}

std::size_t SessionStore::resident() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

// ---------------------------------------------------------------------------

ServiceConfig config_from_env() {
  ServiceConfig c;
  if (const char* v = std::getenv("SLEDGE_STORE_DIR"); v && *v) c.store_dir = v;
  if (const char* v = std::getenv("SLEDGE_PORT"); v && *v) c.port = std::atoi(v);
  if (const char* v = std::getenv("SLEDGE_HOST"); v && *v) c.host = v;
  if (const char* v = std::getenv("SLEDGE_CORS_ORIGIN"); v && *v) c.cors_origin = v;
  return c;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::backend_transport:
    case ErrorCode::protocol:
    case ErrorCode::fixture: return 502;
    case ErrorCode::corrupt_document:
    case ErrorCode::io:
    case ErrorCode::generation: return 500;
    default: return 422;
  }
}

std::string problem_json(ErrorCode code, const std::string& message, int status) {
  nlohmann::ordered_json j{{"type", "about:blank"},
                           {"title", std::string(to_string(code))},
                           {"status", status},
                           {"code", std::string(to_string(code))},
                           {"detail", message}};
  return detail::dump(j);
}

std::string step_record_json(const StepRecord& record, const Warnings& warnings) {
  detail::ordered_json j;
  j["index"] = record.index;
  j["instruction"] = record.instruction;
  j["asset_ref"] = record.asset_ref ? detail::ordered_json(*record.asset_ref) : detail::ordered_json(nullptr);
  j["elements"] = detail::ordered_json::array();
  for (const auto& e : record.elements) j["elements"].push_back(detail::element_to_json(e));
  j["has_layer"] = record.image_layer.has_value();
  j["mask_pixels"] = record.mask ? record.mask->count() : 0;
  j["warnings"] = warnings;
  return detail::dump(j);
}

std::string session_json(const Session& session) {
  const auto& doc = session.document();
  detail::ordered_json j;
  j["id"] = session.id();
  j["cursor"] = session.cursor();
  j["step_count"] = doc.steps.size();
  j["canvas_width"] = doc.canvas_width;
  j["canvas_height"] = doc.canvas_height;
  j["background"] = format_color(doc.background);
  j["theme"] = doc.theme ? detail::ordered_json(*doc.theme) : detail::ordered_json(nullptr);
  return detail::dump(j);
}

// ---------------------------------------------------------------------------

struct DesignService::Impl {
  ServiceConfig config;
  Backends backends;
  const FontRegistry& fonts;
  SessionStore store;
  StepEngine engine;
  httplib::Server server;
  std::thread thread;
  int bound_port = 0;

  Impl(ServiceConfig c, Backends b, const FontRegistry& f)
      : config(std::move(c)),
        backends(std::move(b)),
        fonts(f),
        store(config.store_dir, config.resident_sessions),
        engine(backends.generator, backends.refiner, fonts, config.compositor) {
    routes();
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void problem(httplib::Response& res, ErrorCode code, const std::string& msg, int status) {
    res.status = status;
    res.set_content(problem_json(code, msg, status), "application/problem+json");
  }

  static Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Boundary& b) {
        problem(res, ErrorCode::range, b.what, 409);
      } catch (const Error& e) {
        problem(res, e.code(), e.what(), http_status(e.code()));
      } catch (const std::exception& e) {
        problem(res, ErrorCode::io, e.what(), 500);
      }
    };
  }

  static void json_reply(httplib::Response& res, const std::string& body, int status = 200) {
    res.status = status;
    res.set_content(body, "application/json");
  }

  static void png_reply(httplib::Response& res, const Canvas& c) {
    res.status = 200;
    res.set_content(encode_png(c), "image/png");
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type, Authorization"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
                 json_reply(res, R"({"status":"ok"})");
               }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto j = parse_body(req.body);
                  only_keys(j, {"width", "height", "background", "theme"});
                  const int w = j.contains("width") ? field<int>(j, "width") : 1024;
                  const int h = j.contains("height") ? field<int>(j, "height") : 1024;
                  if (w <= 0 || h <= 0 || w > 8192 || h > 8192) {
                    throw Error(ErrorCode::validation, "width and height must be in 1..8192");
                  }
                  Rgba bg = kOpaqueWhite;
                  if (j.contains("background")) {
                    try {
                      bg = parse_color(field<std::string>(j, "background"));
                    } catch (const Error& e) {
                      throw Error(ErrorCode::validation, e.what());
                    }
                  }
                  std::optional<std::string> theme;
                  if (j.contains("theme") && !j["theme"].is_null()) theme = field<std::string>(j, "theme");
                  auto s = store.create(make_document(w, h, bg, theme));
                  json_reply(res, session_json(*s), 201);
                }));

    server.Get(R"(/sessions/([0-9A-Za-z_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 json_reply(res, session_json(*store.get(req.matches[1])));
               }));

    server.Post(R"(/sessions/([0-9A-Za-z_-]+)/steps)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  StepRequest sr;
                  nlohmann::json j;
                  if (req.is_multipart_form_data()) {
                    if (!req.has_file("request")) throw Error(ErrorCode::validation, "multipart needs a request part");
                    j = parse_body(req.get_file_value("request").content);
                    if (req.has_file("asset")) {
                      try {
                        sr.asset = decode_png(req.get_file_value("asset").content);
                      } catch (const Error& e) {
                        throw Error(ErrorCode::validation, std::string("asset: ") + e.what());
                      }
                    }
                  } else {
                    j = parse_body(req.body);
                  }
                  only_keys(j, {"instruction", "seed", "dilation_radius", "refine"});
                  if (!j.contains("instruction")) throw Error(ErrorCode::validation, "missing \"instruction\"");
                  sr.instruction = field<std::string>(j, "instruction");
                  if (j.contains("seed")) sr.seed = field<std::uint64_t>(j, "seed");
                  if (j.contains("dilation_radius")) {
                    sr.dilation_radius = field<int>(j, "dilation_radius");
                    if (*sr.dilation_radius < 0) throw Error(ErrorCode::validation, "dilation_radius must be >= 0");
                  }
                  if (j.contains("refine")) sr.refine = field<bool>(j, "refine");
                  if (trim(sr.instruction).empty()) throw Error(ErrorCode::validation, "instruction is empty");

                  StepOutcome outcome{StepRecord{}, new_canvas(1, 1, kTransparent), {}};
                  auto s = store.mutate(req.matches[1], [&](Session& session) {
                    outcome = engine.apply_step(session, sr);
                  });
                  json_reply(res, step_record_json(outcome.record, outcome.warnings));
                }));

    server.Post(R"(/sessions/([0-9A-Za-z_-]+)/undo)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto s = store.mutate(req.matches[1], [](Session& session) {
                    if (!session.undo()) throw Boundary{"nothing to undo"};
                  });
                  json_reply(res, session_json(*s));
                }));

    server.Post(R"(/sessions/([0-9A-Za-z_-]+)/redo)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto s = store.mutate(req.matches[1], [](Session& session) {
                    if (!session.redo()) throw Boundary{"nothing to redo"};
                  });
                  json_reply(res, session_json(*s));
                }));

    server.Patch(R"(/sessions/([0-9A-Za-z_-]+)/steps/(\d+)/elements/(\d+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const std::size_t k = parse_index(req.matches[2], "step");
                   const std::size_t e = parse_index(req.matches[3], "element");
                   const auto j = parse_body(req.body);
                   only_keys(j, {"content", "font_family", "font_size", "color", "bbox"});
                   TextPatch patch;
                   if (j.contains("content")) patch.content = field<std::string>(j, "content");
                   if (j.contains("font_family")) patch.font_family = field<std::string>(j, "font_family");
                   if (j.contains("font_size")) patch.font_size = field<int>(j, "font_size");
                   if (j.contains("color")) {
                     try {
                       patch.color = parse_color(field<std::string>(j, "color"));
                     } catch (const Error& err) {
                       throw Error(ErrorCode::validation, err.what());
                     }
                   }
                   if (j.contains("bbox")) patch.bbox = detail::bbox_from_json(j["bbox"], e, ErrorCode::validation);
                   auto s = store.mutate(req.matches[1], [&](Session& session) { session.edit_text(k, e, patch); });
                   json_reply(res, step_record_json(s->document().steps[k]));
                 }));

    server.Get(R"(/sessions/([0-9A-Za-z_-]+)/canvas)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto s = store.get(req.matches[1]);
                 std::size_t upto = s->cursor();
                 if (req.has_param("step")) upto = parse_index(req.get_param_value("step"), "step");
                 Warnings warnings;
                 png_reply(res, flatten(s->document(), upto, fonts, &warnings));
               }));

    server.Get(R"(/sessions/([0-9A-Za-z_-]+)/document)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto s = store.get(req.matches[1]);
                 res.set_header("X-Sledge-Cursor", std::to_string(s->cursor()));
                 json_reply(res, document_json(s->document()));
               }));

    server.Get(R"(/sessions/([0-9A-Za-z_-]+)/layers/(\d+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto s = store.get(req.matches[1]);
                 const std::size_t k = parse_index(req.matches[2], "step");
                 if (k >= s->document().steps.size()) throw Error(ErrorCode::not_found, "no step " + std::to_string(k));
                 const auto& step = s->document().steps[k];
                 if (!step.image_layer) {
                   throw Error(ErrorCode::not_found, "step " + std::to_string(k) + " has no image layer");
                 }
                 png_reply(res, *step.image_layer);
               }));
  }
};

DesignService::DesignService(ServiceConfig config, Backends backends, const FontRegistry& fonts)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(backends), fonts)) {}

DesignService::~DesignService() { stop(); }

void DesignService::listen() {
  if (!impl_->server.listen(impl_->config.host, impl_->config.port)) {
    throw Error(ErrorCode::io, "cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
}

int DesignService::start() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::io, "cannot bind " + impl_->config.host);
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void DesignService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

SessionStore& DesignService::store() { return impl_->store; }

}  // namespace sledge::service
