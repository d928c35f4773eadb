#include "faceq/service.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "faceq/corpus.hpp"
#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/random.hpp"
#include "json.hpp"

namespace faceq::service {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Reply json_reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kOutOfOrder:
    case ErrorCode::kSessionClosed: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

Reply from_error(const Error& e) { return error_reply(status_for(e.code()), error_code_name(e.code()), e.what()); }

std::string fingerprint(const pairwise::SessionConfig& c, std::span<const std::string> pool) {
  std::string text = std::to_string(c.n_tutorial) + "/" + std::to_string(c.n_random) + "/" +
                     std::to_string(c.n_consistency) + "/" + std::to_string(c.consistency_fail_min) + "/" +
                     std::to_string(c.seed);
  for (const auto& t : c.tutorial_bank) text += "|" + t.left_id + ">" + t.right_id + ":" + std::string(to_string(t.expected));
  std::uint64_t h = stable_hash(text);
  for (const auto& id : pool) h = stable_hash(id, h ^ 0x2c);
  return hex64(h);
}

std::vector<std::string> default_pool(const std::filesystem::path& ws) {
  if (std::filesystem::exists(ws / "pool.csv")) return load_id_list(ws / "pool.csv");
  if (std::filesystem::exists(ws / "features.csv")) {
    std::vector<std::string> ids;
    for (const auto& r : load_features(ws / "features.csv").records()) ids.push_back(r.image_id);
    return ids;
  }
  return {};
}

}  // namespace

Reply error_reply(int status, const std::string& code, const std::string& message) {
  return json_reply(status, json{{"error", {{"code", code}, {"message", message}}}});
}

pairwise::SessionConfig parse_session_config(const std::string& json_text) {
  pairwise::SessionConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "session config must be a JSON object");
    c.n_tutorial = j.value("n_tutorial", c.n_tutorial);
    c.n_random = j.value("n_random", c.n_random);
    c.n_consistency = j.value("n_consistency", c.n_consistency);
    c.consistency_fail_min = j.value("consistency_fail_min", c.consistency_fail_min);
    c.seed = j.value("seed", c.seed);
    if (j.contains("tutorial_bank")) {
      for (const auto& t : j.at("tutorial_bank")) {
        const auto expected = pairwise::parse_coarse(t.at("expected").get<std::string>());
        if (!expected || *expected == pairwise::Coarse::kSimilar) {
          throw Error(ErrorCode::kInvalidArgument, "tutorial expected side must be LEFT or RIGHT");
        }
        c.tutorial_bank.push_back({t.at("left").get<std::string>(), t.at("right").get<std::string>(), *expected});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad session config: ") + e.what());
  }
  c.validate();
  return c;
}

pairwise::SessionConfig load_session_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_session_config(buf.str());
}

AnnotationService::AnnotationService(ServiceConfig config) : config_(std::move(config)) {
  config_.session.validate();
  if (config_.image_pool.empty()) config_.image_pool = default_pool(config_.workspace);
  fingerprint_ = fingerprint(config_.session, config_.image_pool);
  const auto dir = config_.workspace / "sessions";
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".log") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& log : logs) replay(log);
  created_ = sessions_.size();
}

std::string AnnotationService::image_ref(const std::string& session_id, std::size_t position, int side) const {
  const std::string key = session_id + "/" + std::to_string(position) + "/" + std::to_string(side);
  return hex64(mix_seed(stable_hash(key, stable_hash(fingerprint_)), 0x1a4e));
}

void AnnotationService::replay(const std::filesystem::path& log) {
  std::ifstream in(log);
  std::string line;
  auto entry = std::make_shared<Entry>();
  entry->log = log;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const std::string ctx = log.string() + " line " + std::to_string(line_no);
    if (f[0] == "create" && f.size() == 3 && !entry->session) {
      if (f[2] != fingerprint_) {
        throw Error(ErrorCode::kInvalidArgument, ctx + ": session was created under a different config or pool");
      }
      entry->session = std::make_unique<pairwise::Session>(
          pairwise::create_session(f[1], config_.session, config_.image_pool));
    } else if (f[0] == "respond" && f.size() == 3 && entry->session) {
      const auto r = pairwise::parse_response(f[2]);
      if (!r) throw Error(ErrorCode::kMalformedRow, ctx + ": bad response '" + f[2] + "'");
      entry->session->record_response(static_cast<std::size_t>(std::stoull(f[1])), *r);
    } else {
      throw Error(ErrorCode::kMalformedRow, ctx + ": unrecognised event");
    }
  }
  if (!entry->session) throw Error(ErrorCode::kMalformedRow, log.string() + ": empty session log");
  sessions_.emplace(log.stem().string(), std::move(entry));
}

std::shared_ptr<AnnotationService::Entry> AnnotationService::find(const std::string& session_id) {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  return it->second;
}

Reply AnnotationService::create_session(const std::string& rater_id) {
  try {
    csv::check_token(rater_id, "rater_id");
    auto entry = std::make_shared<Entry>();
    entry->session = std::make_unique<pairwise::Session>(
        pairwise::create_session(rater_id, config_.session, config_.image_pool));
    std::string id;
    {
      std::unique_lock lock(sessions_mutex_);
      do {
        id = hex64(mix_seed(stable_hash(rater_id, stable_hash(fingerprint_)), created_++));
      } while (sessions_.count(id));
      entry->log = config_.workspace / "sessions" / (id + ".log");
      std::ofstream out(entry->log, std::ios::binary | std::ios::app);
      out << "create," << rater_id << ',' << fingerprint_ << '\n';
      out.flush();
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + entry->log.string());
      sessions_.emplace(id, entry);
    }
    return json_reply(201, json{{"session_id", id},
                                {"phase", std::string(to_string(entry->session->state()))},
                                {"total_pairs", entry->session->schedule().size()}});
  } catch (const Error& e) {
    return from_error(e);
  }
}

Reply AnnotationService::next_pair(const std::string& session_id) {
  try {
    const auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    const pairwise::Session& s = *entry->session;
    if (s.closed()) {
      return json_reply(200, json{{"done", true}, {"verdict", std::string(to_string(s.state()))}});
    }
    const std::size_t pos = s.answered();
    const auto& pair = s.schedule()[pos];
    const std::string left = image_ref(session_id, pos, 0);
    const std::string right = image_ref(session_id, pos, 1);
    {
      std::lock_guard refs_lock(refs_mutex_);
      ref_to_image_[left] = pair.left_id;
      ref_to_image_[right] = pair.right_id;
    }
    return json_reply(200, json{{"done", false},
                                {"position", pos},
                                {"left_image_ref", left},
                                {"right_image_ref", right},
                                {"phase_hidden", true}});
  } catch (const Error& e) {
    return from_error(e);
  }
}

Reply AnnotationService::submit(const std::string& session_id, std::size_t position, const std::string& response) {
  try {
    const auto entry = find(session_id);
    const auto r = pairwise::parse_response(response);
    if (!r) throw Error(ErrorCode::kInvalidArgument, "unknown response '" + response + "'");
    std::lock_guard lock(entry->mutex);
    entry->session->record_response(position, *r);
    std::ofstream out(entry->log, std::ios::binary | std::ios::app);
    out << "respond," << position << ',' << pairwise::to_string(*r) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + entry->log.string());
    return json_reply(200, json{{"accepted", true},
                                {"new_state", std::string(to_string(entry->session->state()))}});
  } catch (const Error& e) {
    return from_error(e);
  }
}

Reply AnnotationService::status(const std::string& session_id) {
  try {
    const auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    const pairwise::Session& s = *entry->session;
    return json_reply(200, json{{"answered", s.answered()},
                                {"remaining", s.remaining()},
                                {"state", std::string(to_string(s.state()))}});
  } catch (const Error& e) {
    return from_error(e);
  }
}

std::vector<std::string> AnnotationService::session_ids() {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, entry] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t AnnotationService::session_count() {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

pairwise::ComparisonSet AnnotationService::accepted_comparisons() {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, entry] : sessions_) entries.push_back(entry);
  }
  std::vector<pairwise::Session> snapshot;
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    if (e->session->state() == pairwise::SessionState::kComplete) snapshot.push_back(*e->session);
  }
  return pairwise::export_comparisons(snapshot);
}

Reply AnnotationService::export_comparisons(const std::string& authorization) {
  if (config_.admin_token.empty()) {
    return error_reply(403, "E_FORBIDDEN", "admin export is disabled (FACEQ_ADMIN_TOKEN not set)");
  }
  if (authorization != "Bearer " + config_.admin_token) {
    return error_reply(401, "E_UNAUTHORIZED", "missing or wrong bearer token");
  }
  return {200, "text/csv", pairwise::format_comparisons(accepted_comparisons())};
}

Reply AnnotationService::image(const std::string& image_ref) {
  std::string image_id;
  {
    std::lock_guard lock(refs_mutex_);
    const auto it = ref_to_image_.find(image_ref);
    if (it == ref_to_image_.end()) return error_reply(404, "E_NOT_FOUND", "unknown image reference");
    image_id = it->second;
  }
  const auto dir = config_.workspace / "images";
  for (const char* ext : {"", ".jpg", ".jpeg", ".png"}) {
    const auto path = dir / (image_id + ext);
    if (!std::filesystem::is_regular_file(path)) continue;
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string type = "application/octet-stream";
    const std::string e = path.extension().string();
    if (e == ".jpg" || e == ".jpeg") type = "image/jpeg";
    if (e == ".png") type = "image/png";
    return {200, type, buf.str()};
  }
  return error_reply(404, "E_NOT_FOUND", "image file not present in workspace");
}

}  // namespace faceq::service
