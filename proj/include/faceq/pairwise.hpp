#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faceq::pairwise {

// The five options offered to a rater for "which face has better quality".
enum class Response { kLeftMuch, kLeftSlight, kSimilar, kRightSlight, kRightMuch };
enum class Coarse { kLeft, kSimilar, kRight };
enum class Phase { kTutorial, kRandom, kConsistency };
enum class SessionState { kTutorial, kActive, kComplete, kRejectedTutorial, kRejectedConsistency };

Coarse coarsen(Response response);
Coarse mirror(Coarse c);

std::string_view to_string(Response r);
std::string_view to_string(Coarse c);
std::string_view to_string(Phase p);
std::string_view to_string(SessionState s);
std::optional<Response> parse_response(std::string_view text);
std::optional<Coarse> parse_coarse(std::string_view text);

bool is_terminal(SessionState s);

struct TutorialPair {
  std::string left_id;
  std::string right_id;
  Coarse expected = Coarse::kLeft;  // LEFT or RIGHT, never SIMILAR
};

struct SessionConfig {
  std::size_t n_tutorial = 6;
  std::size_t n_random = 974;
  std::size_t n_consistency = 21;
  std::vector<TutorialPair> tutorial_bank;
  // A session is rejected once this many repeats disagree with the original.
  std::size_t consistency_fail_min = 10;
  std::uint64_t seed = 0;

  std::size_t total_pairs() const { return n_tutorial + n_random + n_consistency; }
  // Throws InvalidArgument.
  void validate() const;
};

struct ScheduledPair {
  std::string left_id;
  std::string right_id;
  Phase phase = Phase::kRandom;
  // Consistency repeats: the schedule position of the original presentation.
  std::optional<std::size_t> origin;
  // Tutorial pairs only.
  std::optional<Coarse> expected;
};

struct ConsistencyVerdict {
  bool pass = true;
  std::size_t inconsistent = 0;
};

class Session {
 public:
  Session(std::string rater_id, SessionConfig config, std::vector<ScheduledPair> schedule);

  const std::string& rater_id() const { return rater_id_; }
  const SessionConfig& config() const { return config_; }
  std::span<const ScheduledPair> schedule() const { return schedule_; }
  // Responses for positions [0, answered()).
  std::span<const Response> responses() const { return responses_; }
  SessionState state() const { return state_; }
  std::size_t answered() const { return responses_.size(); }
  std::size_t remaining() const { return schedule_.size() - responses_.size(); }
  bool closed() const { return is_terminal(state_); }

  // Answers must arrive strictly in schedule order. Throws SessionClosed or
  // OutOfOrder; on error the session is unchanged.
  void record_response(std::size_t position, Response response);

 private:
  void finish();

  std::string rater_id_;
  SessionConfig config_;
  std::vector<ScheduledPair> schedule_;
  std::vector<Response> responses_;
  SessionState state_;
};

// Tutorial pairs come first (bank order), then n_random distinct unordered
// image pairs, then n_consistency repeats of random-phase pairs with their
// orientation re-drawn. Deterministic in (rater_id, config, pool order).
Session create_session(const std::string& rater_id, const SessionConfig& config,
                       std::span<const std::string> image_pool);

// Throws Incomplete unless every position is answered.
ConsistencyVerdict consistency_verdict(const Session& session);

struct Comparison {
  std::string rater_id;
  std::string left_id;
  std::string right_id;
  Coarse response = Coarse::kSimilar;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

using ComparisonSet = std::vector<Comparison>;

// Random and consistency-phase answers of COMPLETE sessions, coarsened.
ComparisonSet export_comparisons(std::span<const Session> sessions);

std::string format_comparisons(std::span<const Comparison> comparisons);
void save_comparisons(std::span<const Comparison> comparisons, const std::filesystem::path& path);
ComparisonSet load_comparisons(const std::filesystem::path& path);

}  // namespace faceq::pairwise
