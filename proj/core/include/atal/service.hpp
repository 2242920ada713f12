#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "atal/engine.hpp"

namespace atal {

class SessionNotFound : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Environment variable naming the address `serve` binds to.
inline constexpr const char* kBindAddressEnv = "ATAL_BIND_ADDRESS";

struct Session;

/// Human-annotator front of the engine. One session owns one experiment
/// directory (via its lock file). Answers are appended to the directory's
/// answer log before they are acknowledged; once a batch is complete the next
/// round runs on a background worker.
///
/// A directory holding only config.txt starts a fresh run (strategy atal,
/// first seed of the config) on the worker.
class AnnotationService {
 public:
  explicit AnnotationService(Engine::Logger log = {});
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Throws LockConflict if the experiment is already held.
  std::string create_session(const std::filesystem::path& experiment);
  /// Up to `limit` unanswered queries, each with a base64 PPM preview.
  std::vector<nlohmann::json> fetch_queries(const std::string& session_id, int limit);
  /// Throws UnknownQuery or AlreadyAnswered. Returns {query_id, remaining}.
  nlohmann::json submit_label(const std::string& session_id, const std::string& query_id, PixelClass cls);
  nlohmann::json status(const std::string& session_id);
  /// Blocks until the session's worker is idle.
  void wait_idle(const std::string& session_id);
  /// Stops the worker and releases the experiment lock.
  void close_session(const std::string& session_id);

  /// Serves the HTTP API until stop(). Returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and serves on a background thread.
  int start_background(const std::string& host);
  void stop();

 private:
  std::shared_ptr<Session> find(const std::string& id);
  void start_worker(const std::shared_ptr<Session>& s);

  struct Http;
  std::unique_ptr<Http> http_;
  Engine::Logger log_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_id_ = 1;
};

/// Query preview: the image around the point, upscaled, with the superpixel
/// outline and the point marker drawn in. Returns 8-bit PPM bytes.
std::string render_query_preview(const Image& image, const SuperpixelPartition& partition, const LabelQuery& query,
                                 int scale = 8);

}  // namespace atal
