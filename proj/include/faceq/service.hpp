#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "faceq/pairwise.hpp"

namespace faceq::service {

// JSON session config:
//   {"n_tutorial": 6, "n_random": 974, "n_consistency": 21,
//    "consistency_fail_min": 10, "seed": 1,
//    "tutorial_bank": [{"left": "a", "right": "b", "expected": "LEFT"}, ...]}
// Missing keys keep their defaults.
pairwise::SessionConfig load_session_config(const std::filesystem::path& path);
pairwise::SessionConfig parse_session_config(const std::string& json_text);

struct ServiceConfig {
  std::filesystem::path workspace;
  pairwise::SessionConfig session;
  // Images offered for random pairs. Empty: read <workspace>/pool.csv, else
  // <workspace>/features.csv.
  std::vector<std::string> image_pool;
  // Bearer token for export; empty disables the admin endpoint.
  std::string admin_token;
};

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Session store over <workspace>/sessions/<id>.log. Each log is
// `create,<rater_id>,<config fingerprint>` followed by one
// `respond,<position>,<RESPONSE>` line per accepted answer; the constructor
// replays every log. Sessions are locked individually.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);

  Reply create_session(const std::string& rater_id);
  Reply next_pair(const std::string& session_id);
  Reply submit(const std::string& session_id, std::size_t position, const std::string& response);
  Reply status(const std::string& session_id);
  // `authorization` is the raw Authorization header.
  Reply export_comparisons(const std::string& authorization);
  // Serves refs handed out by next_pair only.
  Reply image(const std::string& image_ref);

  // Coarse comparisons of every COMPLETE session, sessions in id order.
  pairwise::ComparisonSet accepted_comparisons();
  std::vector<std::string> session_ids();
  // Opaque ref for one side (0 left, 1 right) of one presentation; the same
  // image shown twice gets unrelated refs.
  std::string image_ref(const std::string& session_id, std::size_t position, int side) const;

  std::size_t session_count();

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<pairwise::Session> session;
    std::filesystem::path log;
  };

  std::shared_ptr<Entry> find(const std::string& session_id);
  void replay(const std::filesystem::path& log);

  ServiceConfig config_;
  std::string fingerprint_;
  std::mutex refs_mutex_;
  std::map<std::string, std::string> ref_to_image_;
  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t created_ = 0;
};

// Error body: {"error": {"code": "E_OUT_OF_ORDER", "message": "..."}}.
Reply error_reply(int status, const std::string& code, const std::string& message);

// HTTP front end (cpp-httplib). Blocks until stop() is called on the server.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  // Returns the bound port (useful with port 0).
  int bind(const std::string& host, int port);
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace faceq::service
