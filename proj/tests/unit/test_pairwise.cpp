#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "faceq/error.hpp"
#include "faceq/pairwise.hpp"
#include "test_support.hpp"

namespace faceq::pairwise {
namespace {

std::vector<std::string> make_pool(std::size_t n) {
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back("img" + std::to_string(i));
  return pool;
}

SessionConfig small_config(std::size_t tutorial, std::size_t random, std::size_t consistency) {
  SessionConfig c;
  c.n_tutorial = tutorial;
  c.n_random = random;
  c.n_consistency = consistency;
  for (std::size_t i = 0; i < tutorial; ++i) {
    c.tutorial_bank.push_back({"good" + std::to_string(i), "bad" + std::to_string(i),
                               i % 2 ? Coarse::kRight : Coarse::kLeft});
  }
  c.seed = 17;
  return c;
}

Response answer_for(Coarse c) {
  switch (c) {
    case Coarse::kLeft: return Response::kLeftMuch;
    case Coarse::kRight: return Response::kRightSlight;
    default: return Response::kSimilar;
  }
}

// Answers every position, making exactly `bad` consistency repeats disagree.
void drive(Session& s, std::size_t bad) {
  std::size_t made_bad = 0;
  while (!s.closed()) {
    const std::size_t pos = s.answered();
    const ScheduledPair& p = s.schedule()[pos];
    Response r = Response::kLeftSlight;
    if (p.phase == Phase::kTutorial) {
      r = answer_for(*p.expected);
    } else if (p.phase == Phase::kConsistency) {
      const ScheduledPair& orig = s.schedule()[*p.origin];
      Coarse c = coarsen(s.responses()[*p.origin]);
      if (orig.left_id != p.left_id) c = mirror(c);
      if (made_bad < bad) {
        c = c == Coarse::kSimilar ? Coarse::kLeft : Coarse::kSimilar;
        ++made_bad;
      }
      r = answer_for(c);
    }
    s.record_response(pos, r);
  }
}

TEST(Coarsen, FiveToThree) {
  EXPECT_EQ(coarsen(Response::kLeftMuch), Coarse::kLeft);
  EXPECT_EQ(coarsen(Response::kLeftSlight), Coarse::kLeft);
  EXPECT_EQ(coarsen(Response::kSimilar), Coarse::kSimilar);
  EXPECT_EQ(coarsen(Response::kRightSlight), Coarse::kRight);
  EXPECT_EQ(coarsen(Response::kRightMuch), Coarse::kRight);
  EXPECT_EQ(mirror(Coarse::kLeft), Coarse::kRight);
  EXPECT_EQ(mirror(Coarse::kSimilar), Coarse::kSimilar);
}

TEST(Coarsen, TextRoundTrip) {
  for (Response r : {Response::kLeftMuch, Response::kLeftSlight, Response::kSimilar, Response::kRightSlight,
                     Response::kRightMuch}) {
    EXPECT_EQ(parse_response(to_string(r)), r);
  }
  EXPECT_FALSE(parse_response("MAYBE").has_value());
}

TEST(Schedule, DefaultLengthIs1001) {
  SessionConfig c = small_config(6, 974, 21);
  const auto pool = make_pool(1949);
  const Session s = create_session("w1", c, pool);
  EXPECT_EQ(s.schedule().size(), 1001u);
  EXPECT_EQ(s.state(), SessionState::kTutorial);
}

TEST(Schedule, ThreeRandomPairsFromThreeImages) {
  const auto pool = make_pool(3);
  const Session s = create_session("w", small_config(0, 3, 0), pool);
  ASSERT_EQ(s.schedule().size(), 3u);
  std::set<std::set<std::string>> seen;
  for (const auto& p : s.schedule()) {
    EXPECT_EQ(p.phase, Phase::kRandom);
    EXPECT_NE(p.left_id, p.right_id);
    seen.insert({p.left_id, p.right_id});
  }
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(s.state(), SessionState::kActive);
}

TEST(Schedule, PoolTooSmall) {
  const auto pool = make_pool(3);
  try {
    create_session("w", small_config(0, 4, 0), pool);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPoolTooSmall);
  }
}

TEST(Schedule, InvalidConfig) {
  const auto pool = make_pool(10);
  EXPECT_THROW(create_session("w", small_config(0, 2, 3), pool), Error);
  SessionConfig c = small_config(2, 5, 1);
  c.tutorial_bank.pop_back();
  EXPECT_THROW(create_session("w", c, pool), Error);
  c = small_config(0, 5, 1);
  c.consistency_fail_min = 0;
  EXPECT_THROW(create_session("w", c, pool), Error);
}

TEST(Schedule, DeterministicAndRaterDependent) {
  const auto pool = make_pool(50);
  const auto c = small_config(2, 40, 5);
  const Session a = create_session("alice", c, pool);
  const Session b = create_session("alice", c, pool);
  const Session other = create_session("bob", c, pool);
  bool differs = false;
  for (std::size_t i = 0; i < a.schedule().size(); ++i) {
    EXPECT_EQ(a.schedule()[i].left_id, b.schedule()[i].left_id);
    EXPECT_EQ(a.schedule()[i].right_id, b.schedule()[i].right_id);
    differs |= a.schedule()[i].left_id != other.schedule()[i].left_id;
  }
  EXPECT_TRUE(differs);
}

TEST(Schedule, RepeatsComeFromOwnRandomPhase) {
  const auto pool = make_pool(40);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = small_config(3, 60, 21);
    c.seed = seed;
    const Session s = create_session("w" + std::to_string(seed), c, pool);
    std::set<std::size_t> origins;
    std::set<std::set<std::string>> random_pairs;
    for (std::size_t i = 0; i < s.schedule().size(); ++i) {
      const auto& p = s.schedule()[i];
      if (p.phase == Phase::kRandom) {
        EXPECT_TRUE(random_pairs.insert({p.left_id, p.right_id}).second);
      }
      if (p.phase != Phase::kConsistency) continue;
      ASSERT_TRUE(p.origin.has_value());
      EXPECT_LT(*p.origin, i);
      const auto& o = s.schedule()[*p.origin];
      EXPECT_EQ(o.phase, Phase::kRandom);
      EXPECT_EQ((std::set<std::string>{p.left_id, p.right_id}), (std::set<std::string>{o.left_id, o.right_id}));
      origins.insert(*p.origin);
    }
    EXPECT_EQ(origins.size(), 21u);
  }
}

TEST(Gate, CorrectTutorialAnswersActivate) {
  const auto pool = make_pool(100);
  Session s = create_session("w", small_config(6, 10, 2), pool);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(s.state(), SessionState::kTutorial);
    s.record_response(i, answer_for(*s.schedule()[i].expected));
  }
  EXPECT_EQ(s.state(), SessionState::kActive);
}

TEST(Gate, WrongSideOrSimilarRejects) {
  const auto pool = make_pool(100);
  for (Response bad : {Response::kSimilar, Response::kRightMuch}) {
    Session s = create_session("w", small_config(6, 10, 2), pool);
    s.record_response(0, bad);
    EXPECT_EQ(s.state(), SessionState::kRejectedTutorial);
    try {
      s.record_response(1, Response::kLeftMuch);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSessionClosed);
    }
  }
}

TEST(Record, OutOfOrderLeavesSessionUnchanged) {
  const auto pool = make_pool(10);
  Session s = create_session("w", small_config(0, 5, 1), pool);
  s.record_response(0, Response::kSimilar);
  for (std::size_t pos : {0u, 2u, 7u}) {
    try {
      s.record_response(pos, Response::kSimilar);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kOutOfOrder);
    }
  }
  EXPECT_EQ(s.answered(), 1u);
}

TEST(Consistency, NineInconsistentPasses) {
  const auto pool = make_pool(200);
  Session s = create_session("w", small_config(6, 974 / 10, 21), pool);
  drive(s, 9);
  EXPECT_EQ(s.state(), SessionState::kComplete);
  const auto v = consistency_verdict(s);
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.inconsistent, 9u);
}

TEST(Consistency, TenInconsistentFails) {
  const auto pool = make_pool(200);
  Session s = create_session("w", small_config(6, 97, 21), pool);
  drive(s, 10);
  EXPECT_EQ(s.state(), SessionState::kRejectedConsistency);
  const auto v = consistency_verdict(s);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.inconsistent, 10u);
}

TEST(Consistency, MirroredRepeatIsConsistent) {
  const auto pool = make_pool(50);
  Session s = create_session("w", small_config(0, 30, 21), pool);
  drive(s, 0);
  EXPECT_EQ(consistency_verdict(s).inconsistent, 0u);
  bool any_swapped = false;
  for (const auto& p : s.schedule()) {
    if (p.phase == Phase::kConsistency) any_swapped |= s.schedule()[*p.origin].left_id != p.left_id;
  }
  EXPECT_TRUE(any_swapped);
}

TEST(Consistency, IncompleteThrows) {
  const auto pool = make_pool(10);
  Session s = create_session("w", small_config(0, 5, 1), pool);
  try {
    consistency_verdict(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncomplete);
  }
}

TEST(Export, OnlyCompleteSessionsWithoutTutorial) {
  const auto pool = make_pool(60);
  const auto c = small_config(2, 20, 3);
  std::vector<Session> sessions;
  for (const char* r : {"a", "b", "c"}) sessions.push_back(create_session(r, c, pool));
  drive(sessions[0], 0);
  drive(sessions[1], 0);
  auto strict = c;
  strict.consistency_fail_min = 1;
  sessions.push_back(create_session("d", strict, pool));
  drive(sessions[3], 1);
  ASSERT_EQ(sessions[3].state(), SessionState::kRejectedConsistency);
  const auto out = export_comparisons(sessions);
  EXPECT_EQ(out.size(), 2u * 23u);
  for (const auto& cmp : out) {
    EXPECT_TRUE(cmp.rater_id == "a" || cmp.rater_id == "b");
    EXPECT_EQ(cmp.left_id.rfind("img", 0), 0u);
  }
}

TEST(Comparisons, FileRoundTrip) {
  testing::TempDir dir;
  const ComparisonSet cs{{"w1", "x", "y", Coarse::kLeft}, {"w2", "y", "z", Coarse::kSimilar}};
  save_comparisons(cs, dir / "c.csv");
  EXPECT_EQ(load_comparisons(dir / "c.csv"), cs);
  testing::write_text(dir / "bad.csv", "rater_id,left_id,right_id,response\nw,x,y,LEFT_MUCH\n");
  EXPECT_THROW(load_comparisons(dir / "bad.csv"), Error);
}

}  // namespace
}  // namespace faceq::pairwise
