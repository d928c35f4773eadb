#include <gtest/gtest.h>

#include <cmath>

#include "faceq/mqv.hpp"
#include "faceq/random.hpp"
#include "test_support.hpp"

namespace faceq::mqv {
namespace {

TEST(ZScore, WorkedExample) {
  const auto p = ProbeScoreProfile::make("p", 0.9, {0.3, 0.5, 0.7});
  EXPECT_NEAR(p.impostor_mean, 0.5, 1e-15);
  EXPECT_NEAR(p.impostor_sd, std::sqrt(0.08 / 3.0), 1e-15);
  EXPECT_NEAR(z_score(p), 2.4494897427831779, 1e-12);
}

TEST(ZScore, GenuineAtMeanIsZero) {
  EXPECT_EQ(z_score(ProbeScoreProfile::make("p", 2.0, {1.0, 3.0})), 0.0);
}

TEST(ZScore, EqualImpostorsAreDegenerate) {
  try {
    z_score(ProbeScoreProfile::make("p", 0.9, {0.4, 0.4, 0.4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateImpostorSpread);
  }
}

TEST(ZScore, OneImpostorIsTooFew) {
  try {
    ProbeScoreProfile::make("p", 0.9, {0.4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewImpostors);
  }
}

TEST(ZScore, AffineEquivariance) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> imp(2 + rng.index(20));
    for (auto& v : imp) v = rng.normal();
    const double g = rng.normal(1, 1);
    const double a = std::exp(rng.uniform(-3, 3)), b = rng.uniform(-10, 10);
    std::vector<double> moved;
    for (double v : imp) moved.push_back(a * v + b);
    const double z0 = z_score(ProbeScoreProfile::make("p", g, imp));
    const double z1 = z_score(ProbeScoreProfile::make("p", a * g + b, moved));
    EXPECT_NEAR(z0, z1, 1e-9 * (1 + std::abs(z0)));
  }
}

struct Fixture {
  FeatureCorpus corpus{{{"gA", "A", {0}}, {"gB", "B", {0}}, {"gC", "C", {0}}, {"gD", "D", {0}},
                        {"pA1", "A", {0}}, {"pA2", "A", {0}}, {"pB", "B", {0}}}};
  std::vector<std::string> gallery{"gA", "gB", "gC", "gD"};
};

TEST(Compute, SingleProbe) {
  Fixture f;
  const ScoreSet s({{"pA1", "gA", 0.9}, {"pA1", "gB", 0.3}, {"pA1", "gC", 0.5}, {"pA1", "gD", 0.7}});
  const std::vector<std::string> probes{"pA1"};
  const auto r = compute_mqv(s, f.corpus, f.gallery, probes);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_NEAR(r.quality.at("pA1"), 2.4494897427831779, 1e-12);
}

TEST(Compute, FailuresAreReportedAndOmitted) {
  Fixture f;
  const ScoreSet s({{"pA1", "gB", 0.3}, {"pA1", "gC", 0.5},
                    {"pA2", "gA", 0.8}, {"pA2", "gB", 0.2}, {"pA2", "gC", 0.4}, {"pA2", "gD", 0.6},
                    {"pB", "gB", 0.8}, {"pB", "gA", 0.2}, {"pB", "gC", 0.2}});
  const std::vector<std::string> probes{"pA1", "pA2", "pB"};
  const auto r = compute_mqv(s, f.corpus, f.gallery, probes);
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_EQ(r.failures[0].probe_id, "pA1");
  EXPECT_EQ(r.failures[0].kind, ErrorCode::kMissingGenuineScore);
  EXPECT_EQ(r.failures[1].kind, ErrorCode::kDegenerateImpostorSpread);
  EXPECT_EQ(r.quality.size(), 1u);
  EXPECT_TRUE(r.quality.contains("pA2"));
}

TEST(Compute, SameSubjectProbesUseOwnImpostors) {
  Fixture f;
  const ScoreSet s({{"pA1", "gA", 0.9}, {"pA1", "gB", 0.3}, {"pA1", "gC", 0.5}, {"pA1", "gD", 0.7},
                    {"pA2", "gA", 0.6}, {"pA2", "gB", 0.1}, {"pA2", "gC", 0.1}, {"pA2", "gD", 0.4}});
  const std::vector<std::string> probes{"pA1", "pA2"};
  const auto r = compute_mqv(s, f.corpus, f.gallery, probes);
  const double m = 0.2, sd = std::sqrt(((0.1 - m) * (0.1 - m) * 2 + (0.4 - m) * (0.4 - m)) / 3);
  EXPECT_NEAR(r.quality.at("pA1"), 2.4494897427831779, 1e-12);
  EXPECT_NEAR(r.quality.at("pA2"), (0.6 - m) / sd, 1e-12);
}

TEST(Compute, ScoresOutsideGalleryIgnored) {
  Fixture f;
  const ScoreSet s({{"pA1", "gA", 0.9}, {"pA1", "gB", 0.3}, {"pA1", "gC", 0.5}, {"pA1", "gD", 0.7},
                    {"pA1", "pB", 100.0}});
  const std::vector<std::string> probes{"pA1"};
  EXPECT_NEAR(compute_mqv(s, f.corpus, f.gallery, probes).quality.at("pA1"), 2.4494897427831779, 1e-12);
}

TEST(Compute, OrderingFollowsGenuineForSharedImpostors) {
  Fixture f;
  std::vector<ScoreEntry> e;
  for (const char* p : {"pA1", "pA2"}) {
    e.push_back({p, "gB", 0.1});
    e.push_back({p, "gC", 0.3});
    e.push_back({p, "gD", 0.2});
  }
  e.push_back({"pA1", "gA", 0.7});
  e.push_back({"pA2", "gA", 0.75});
  const std::vector<std::string> probes{"pA1", "pA2"};
  const auto r = compute_mqv(ScoreSet(e), f.corpus, f.gallery, probes);
  EXPECT_LT(r.quality.at("pA1"), r.quality.at("pA2"));
}

TEST(Compute, BadPartition) {
  Fixture f;
  const std::vector<std::string> gallery{"gA", "pA1"}, probes{"pA2"};
  try {
    compute_mqv(ScoreSet(), f.corpus, gallery, probes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Failures, FileFormat) {
  testing::TempDir dir;
  const std::vector<ProbeFailure> fs{{"p1", ErrorCode::kMissingGenuineScore}};
  save_failures(fs, dir / "f.csv");
  EXPECT_EQ(testing::read_text(dir / "f.csv"), "probe_id,error_kind\np1," + std::string(failure_name(fs[0].kind)) + "\n");
}

}  // namespace
}  // namespace faceq::mqv
