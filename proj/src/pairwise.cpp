#include "faceq/pairwise.hpp"

#include <numeric>
#include <unordered_set>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/random.hpp"

namespace faceq::pairwise {

Coarse coarsen(Response response) {
  switch (response) {
    case Response::kLeftMuch:
    case Response::kLeftSlight:
      return Coarse::kLeft;
    case Response::kSimilar:
      return Coarse::kSimilar;
    case Response::kRightSlight:
    case Response::kRightMuch:
      return Coarse::kRight;
  }
  return Coarse::kSimilar;
}

Coarse mirror(Coarse c) {
  if (c == Coarse::kLeft) return Coarse::kRight;
  if (c == Coarse::kRight) return Coarse::kLeft;
  return c;
}

std::string_view to_string(Response r) {
  switch (r) {
    case Response::kLeftMuch: return "LEFT_MUCH";
    case Response::kLeftSlight: return "LEFT_SLIGHT";
    case Response::kSimilar: return "SIMILAR";
    case Response::kRightSlight: return "RIGHT_SLIGHT";
    case Response::kRightMuch: return "RIGHT_MUCH";
  }
  return "";
}

std::string_view to_string(Coarse c) {
  switch (c) {
    case Coarse::kLeft: return "LEFT";
    case Coarse::kSimilar: return "SIMILAR";
    case Coarse::kRight: return "RIGHT";
  }
  return "";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kTutorial: return "TUTORIAL";
    case Phase::kRandom: return "RANDOM";
    case Phase::kConsistency: return "CONSISTENCY";
  }
  return "";
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kTutorial: return "TUTORIAL";
    case SessionState::kActive: return "ACTIVE";
    case SessionState::kComplete: return "COMPLETE";
    case SessionState::kRejectedTutorial: return "REJECTED_TUTORIAL";
    case SessionState::kRejectedConsistency: return "REJECTED_CONSISTENCY";
  }
  return "";
}

std::optional<Response> parse_response(std::string_view text) {
  for (Response r : {Response::kLeftMuch, Response::kLeftSlight, Response::kSimilar,
                     Response::kRightSlight, Response::kRightMuch}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

std::optional<Coarse> parse_coarse(std::string_view text) {
  for (Coarse c : {Coarse::kLeft, Coarse::kSimilar, Coarse::kRight}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

bool is_terminal(SessionState s) {
  return s == SessionState::kComplete || s == SessionState::kRejectedTutorial ||
         s == SessionState::kRejectedConsistency;
}

void SessionConfig::validate() const {
  if (n_consistency > n_random) {
    throw Error(ErrorCode::kInvalidArgument, "n_consistency exceeds n_random");
  }
  if (tutorial_bank.size() < n_tutorial) {
    throw Error(ErrorCode::kInvalidArgument, "tutorial bank smaller than n_tutorial");
  }
  if (consistency_fail_min < 1) {
    throw Error(ErrorCode::kInvalidArgument, "consistency_fail_min must be at least 1");
  }
  for (const auto& t : tutorial_bank) {
    if (t.expected == Coarse::kSimilar) {
      throw Error(ErrorCode::kInvalidArgument, "tutorial pair expects SIMILAR");
    }
    if (t.left_id == t.right_id) {
      throw Error(ErrorCode::kInvalidArgument, "tutorial pair shows the same image twice");
    }
  }
}

Session::Session(std::string rater_id, SessionConfig config, std::vector<ScheduledPair> schedule)
    : rater_id_(std::move(rater_id)),
      config_(std::move(config)),
      schedule_(std::move(schedule)),
      state_(config_.n_tutorial > 0 ? SessionState::kTutorial : SessionState::kActive) {
  if (schedule_.empty()) finish();
}

void Session::record_response(std::size_t position, Response response) {
  if (closed()) {
    throw Error(ErrorCode::kSessionClosed, "session for " + rater_id_ + " is " +
                                               std::string(to_string(state_)));
  }
  if (position != responses_.size()) {
    throw Error(ErrorCode::kOutOfOrder, "expected position " + std::to_string(responses_.size()) +
                                            ", got " + std::to_string(position));
  }
  responses_.push_back(response);

  const ScheduledPair& pair = schedule_[position];
  if (pair.phase == Phase::kTutorial) {
    if (coarsen(response) != pair.expected) {
      state_ = SessionState::kRejectedTutorial;
      return;
    }
    if (position + 1 == config_.n_tutorial) state_ = SessionState::kActive;
  }
  if (responses_.size() == schedule_.size()) finish();
}

void Session::finish() {
  state_ = consistency_verdict(*this).pass ? SessionState::kComplete
                                           : SessionState::kRejectedConsistency;
}

namespace {

struct PairIndex {
  std::size_t a;
  std::size_t b;
};

std::vector<PairIndex> sample_pairs(std::size_t pool, std::size_t count, Rng& rng) {
  const std::uint64_t total = static_cast<std::uint64_t>(pool) * (pool - 1) / 2;
  std::vector<PairIndex> out;
  out.reserve(count);
  if (static_cast<std::uint64_t>(count) * 3 >= total) {
    std::vector<PairIndex> all;
    all.reserve(total);
    for (std::size_t a = 0; a < pool; ++a) {
      for (std::size_t b = a + 1; b < pool; ++b) all.push_back({a, b});
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(all.size() - i));
      std::swap(all[i], all[j]);
      out.push_back(all[i]);
    }
    return out;
  }
  std::unordered_set<std::uint64_t> taken;
  while (out.size() < count) {
    std::size_t a = static_cast<std::size_t>(rng.index(pool));
    std::size_t b = static_cast<std::size_t>(rng.index(pool));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (taken.insert(static_cast<std::uint64_t>(a) * pool + b).second) out.push_back({a, b});
  }
  return out;
}

}  // namespace

Session create_session(const std::string& rater_id, const SessionConfig& config,
                       std::span<const std::string> image_pool) {
  config.validate();
  const std::size_t pool = image_pool.size();
  if (pool < 2) throw Error(ErrorCode::kPoolTooSmall, "image pool needs at least 2 images");
  const std::uint64_t distinct = static_cast<std::uint64_t>(pool) * (pool - 1) / 2;
  if (config.n_random > distinct) {
    throw Error(ErrorCode::kPoolTooSmall, "image pool of " + std::to_string(pool) +
                                              " cannot supply " + std::to_string(config.n_random) +
                                              " distinct pairs");
  }

  Rng rng(mix_seed(config.seed, stable_hash(rater_id)));
  std::vector<ScheduledPair> schedule;
  schedule.reserve(config.total_pairs());

  for (std::size_t i = 0; i < config.n_tutorial; ++i) {
    const auto& t = config.tutorial_bank[i];
    schedule.push_back({t.left_id, t.right_id, Phase::kTutorial, std::nullopt, t.expected});
  }

  const std::size_t random_begin = schedule.size();
  for (const auto& [a, b] : sample_pairs(pool, config.n_random, rng)) {
    const bool swap = rng.coin();
    schedule.push_back({image_pool[swap ? b : a], image_pool[swap ? a : b], Phase::kRandom,
                        std::nullopt, std::nullopt});
  }

  std::vector<std::size_t> picks(config.n_random);
  std::iota(picks.begin(), picks.end(), random_begin);
  for (std::size_t i = 0; i < config.n_consistency; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(picks.size() - i));
    std::swap(picks[i], picks[j]);
    const ScheduledPair& original = schedule[picks[i]];
    const bool swap = rng.coin();
    schedule.push_back({swap ? original.right_id : original.left_id,
                        swap ? original.left_id : original.right_id, Phase::kConsistency,
                        picks[i], std::nullopt});
  }
  return Session(rater_id, config, std::move(schedule));
}

ConsistencyVerdict consistency_verdict(const Session& session) {
  if (session.answered() != session.schedule().size()) {
    throw Error(ErrorCode::kIncomplete, "session for " + session.rater_id() + " is incomplete");
  }
  ConsistencyVerdict verdict;
  const auto schedule = session.schedule();
  const auto responses = session.responses();
  for (std::size_t pos = 0; pos < schedule.size(); ++pos) {
    const ScheduledPair& repeat = schedule[pos];
    if (repeat.phase != Phase::kConsistency) continue;
    const ScheduledPair& original = schedule[*repeat.origin];
    Coarse again = coarsen(responses[pos]);
    if (repeat.left_id != original.left_id) again = mirror(again);
    if (again != coarsen(responses[*repeat.origin])) ++verdict.inconsistent;
  }
  verdict.pass = verdict.inconsistent < session.config().consistency_fail_min;
  return verdict;
}

ComparisonSet export_comparisons(std::span<const Session> sessions) {
  ComparisonSet out;
  for (const Session& s : sessions) {
    if (s.state() != SessionState::kComplete) continue;
    const auto schedule = s.schedule();
    for (std::size_t pos = 0; pos < schedule.size(); ++pos) {
      if (schedule[pos].phase == Phase::kTutorial) continue;
      out.push_back({s.rater_id(), schedule[pos].left_id, schedule[pos].right_id,
                     coarsen(s.responses()[pos])});
    }
  }
  return out;
}

std::string format_comparisons(std::span<const Comparison> comparisons) {
  std::string out = "rater_id,left_id,right_id,response\n";
  for (const auto& c : comparisons) {
    out += c.rater_id + ',' + c.left_id + ',' + c.right_id + ',' + std::string(to_string(c.response)) + '\n';
  }
  return out;
}

void save_comparisons(std::span<const Comparison> comparisons, const std::filesystem::path& path) {
  csv::write_file(path, format_comparisons(comparisons));
}

ComparisonSet load_comparisons(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"rater_id", "left_id", "right_id", "response"});
  ComparisonSet out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = table.source + " row " + std::to_string(i + 1);
    if (row.size() != 4) throw Error(ErrorCode::kMalformedRow, ctx + ": expected 4 fields");
    const auto c = parse_coarse(row[3]);
    if (!c) throw Error(ErrorCode::kMalformedRow, ctx + ": response must be LEFT, SIMILAR or RIGHT");
    out.push_back({row[0], row[1], row[2], *c});
  }
  return out;
}

}  // namespace faceq::pairwise
