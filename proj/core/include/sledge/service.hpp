#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sledge/backends.hpp"
#include "sledge/document.hpp"
#include "sledge/engine.hpp"
#include "sledge/text.hpp"

namespace sledge::service {

/// A bundle directory plus its session.json cursor. The store and the CLI
/// both go through these, so either surface can open the other's documents.
Session load_session(const std::filesystem::path& dir, const std::string& id);
void save_session(const Session& session, const std::filesystem::path& dir);

/// Sessions keyed by id, persisted as `<root>/<id>.sledge/` bundles (plus a
/// session.json holding the cursor). Every committed mutation is on disk
/// before it becomes visible; idle sessions beyond `capacity` are dropped
/// from memory (least recently used first) and reloaded on demand.
class SessionStore {
 public:
  SessionStore(std::filesystem::path root, std::size_t capacity = 64);

  std::shared_ptr<const Session> create(DesignDocument document);
  /// Throws not_found.
  std::shared_ptr<const Session> get(const std::string& id);

  /// Applies `fn` to a private copy while holding the session's writer lock,
  /// persists, then publishes. If `fn` or persistence throws, nothing changes.
  std::shared_ptr<const Session> mutate(const std::string& id,
                                        const std::function<void(Session&)>& fn);

  std::filesystem::path bundle_dir(const std::string& id) const;
  std::size_t resident() const;

 private:
  struct Slot {
    std::mutex writer;
    std::shared_ptr<const Session> committed;
  };

  std::shared_ptr<Slot> slot(const std::string& id);
  void persist(const Session& session) const;
  std::shared_ptr<const Session> load(const std::string& id) const;
  void touch(const std::string& id);  // requires mutex_
  void evict();                       // requires mutex_

  std::filesystem::path root_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::list<std::string> lru_;  // front = most recent
};

struct ServiceConfig {
  std::filesystem::path store_dir = "sledge-store";
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string cors_origin = "*";
  std::size_t resident_sessions = 64;
  CompositorConfig compositor;
};

/// SLEDGE_STORE_DIR, SLEDGE_PORT.
ServiceConfig config_from_env();

/// HTTP front-end over SessionStore + StepEngine.
class DesignService {
 public:
  DesignService(ServiceConfig config, Backends backends, const FontRegistry& fonts);
  ~DesignService();
  DesignService(const DesignService&) = delete;
  DesignService& operator=(const DesignService&) = delete;

  /// Blocks until stop().
  void listen();
  /// Binds (port 0 picks a free one), serves on a background thread, returns the port.
  int start();
  void stop();

  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// JSON for API responses.
std::string step_record_json(const StepRecord& record, const Warnings& warnings = {});
std::string session_json(const Session& session);

/// HTTP status for an error code (422 validation, 404 not found, 502 backend, ...).
int http_status(ErrorCode code);
std::string problem_json(ErrorCode code, const std::string& message, int status);

}  // namespace sledge::service
