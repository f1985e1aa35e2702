#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "pmd/apps.hpp"
#include "pmd/samplers.hpp"
#include "json.hpp"

namespace pmd::service {

/// Error carrying the HTTP status it maps to (404 unknown session, 409 busy,
/// 422 malformed feedback, 400 bad request).
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Annotation rectangle on mode `mode`: columns [x, x+w), rows [y, y+h).
struct Rect {
  std::size_t mode = 0;
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
};

enum class Status { idle, solving };

/// One interactive guidance run. State changes only through replayable events
/// (create, next, select) recorded in `events`.
struct Session {
  std::string id;
  std::shared_ptr<const SampleSet> samples;
  std::optional<DepthMap> ground_truth;
  DepthMap variance;
  ModeOptions mode_options;
  ModeSet modes;
  std::vector<std::vector<Rect>> annotations;  // per mode
  std::optional<std::size_t> selected;
  std::uint64_t revision = 0;
  std::atomic<Status> status{Status::idle};
  std::vector<nlohmann::json> events;

  mutable std::shared_mutex mutex;
  std::mutex worker_mutex;
  std::thread worker;

  ~Session();
};

/// Session registry backing the HTTP API. Safe to call from many threads:
/// reads take shared locks, each session admits one mutation at a time, and
/// solves run on a per-session worker thread.
class SessionStore {
 public:
  /// With a state directory, sessions are persisted as JSON-lines event logs
  /// (<dir>/<id>.jsonl) and replayed on construction.
  explicit SessionStore(std::optional<std::filesystem::path> state_dir = std::nullopt);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  /// Body: {"samples_path", "gt_path"?} or {"scene_spec", "sampler_cfg", "K", "stride", "S"};
  /// optional "lambda", "ramp", "solver".
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json info(const std::string& id) const;
  nlohmann::json mode(const std::string& id, std::size_t m) const;
  /// Starts generating the next mode. Body: {"lambda"?, "annotations": [{mode, x, y, w, h}]}.
  /// With `wait` the call returns after the solve finishes.
  nlohmann::json next(const std::string& id, const nlohmann::json& body, bool wait = false);
  nlohmann::json select(const std::string& id, const nlohmann::json& body);
  nlohmann::json variance(const std::string& id) const;

  /// Blocks until the session's in-flight solve (if any) finishes.
  void wait_idle(const std::string& id);
  ModeSet modes(const std::string& id) const;
  std::vector<nlohmann::json> events(const std::string& id) const;

  /// Rebuild a session by replaying its event log, synchronously.
  static std::shared_ptr<Session> replay(const std::vector<nlohmann::json>& events);

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void persist(const Session& s, const nlohmann::json& event) const;

  std::optional<std::filesystem::path> state_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// HTTP/1.1 front end over a SessionStore.
class HttpServer {
 public:
  explicit HttpServer(SessionStore& store);
  ~HttpServer();

  /// Binds and serves on a background thread; returns the bound port (0 picks one).
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pmd::service
