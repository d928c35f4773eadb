#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "faceq/cli.hpp"
#include "faceq/corpus.hpp"
#include "faceq/pairwise.hpp"
#include "test_support.hpp"

namespace faceq::cli {
namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "faceq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

TEST(Cli, HelpOnEverySubcommand) {
  const std::vector<std::vector<std::string>> commands{
      {}, {"ingest"}, {"session"}, {"session", "new"}, {"session", "next"}, {"session", "respond"},
      {"session", "status"}, {"session", "export"}, {"complete"}, {"mqv"}, {"train"}, {"predict"},
      {"evaluate"}, {"evaluate", "evr"}, {"evaluate", "roc"}, {"evaluate", "sweep"}, {"protocol"},
      {"protocol", "within"}, {"protocol", "cross"}, {"synth"}, {"serve"}};
  for (auto c : commands) {
    c.push_back("--help");
    const Outcome r = run(c);
    EXPECT_EQ(r.code, 0) << c.front() << ": " << r.err;
    EXPECT_NE(r.out.find("Usage"), std::string::npos);
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"synth", "--subjects", "3"}).code, 1);
  EXPECT_EQ(run({"complete", "--comparisons", "x.csv", "--out", "y.csv"}).code, 1);
}

TEST(Cli, MalformedInputIsDataError) {
  testing::TempDir dir;
  testing::write_text(dir / "f.csv", "image_id,subject_id,detect_ok,f0\na,A,1,oops\n");
  const Outcome r = run({"ingest", "--features", (dir / "f.csv").string(), "--out", (dir / "ws").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_MALFORMED_ROW", 0), 0u) << r.err;
}

class Pipeline : public ::testing::Test {
 protected:
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  void SetUp() override {
    testing::write_text(dir_ / "grid.csv", "C,gamma,epsilon\n1,0.25,0.1\n10,0.0625,0.05\n");
    ASSERT_EQ(run({"synth", "--subjects", "30", "--per-subject", "3", "--dim", "4", "--seed", "3", "--out",
                   p("ws"), "--workers", "4", "--comparisons-per-worker", "150"})
                  .code,
              0);
  }

  Outcome mqv() {
    return run({"mqv", "--features", p("ws/features.csv"), "--scores", p("ws/scores.csv"), "--gallery",
                p("ws/gallery.csv"), "--probes", p("ws/probes.csv"), "--out", p("mqv.csv")});
  }

  Outcome train() {
    return run({"train", "--features", p("ws/features.csv"), "--targets", p("mqv.csv"), "--grid", p("grid.csv"),
                "--folds", "3", "--seed", "1", "--target-kind", "mqv", "--out", p("model.json")});
  }

  testing::TempDir dir_;
};

TEST_F(Pipeline, SynthMqvTrainPredictEvaluate) {
  Outcome r = mqv();
  ASSERT_EQ(r.code, 0) << r.err;
  r = train();
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"predict", "--model", p("model.json"), "--features", p("ws/features.csv"), "--out", p("pred.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_quality(dir_ / "pred.csv").size(), 90u);
  r = run({"evaluate", "evr", "--features", p("ws/features.csv"), "--scores", p("ws/scores.csv"), "--quality",
           p("pred.csv"), "--initial", "0.2", "--out", p("evr.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string curve = testing::read_text(dir_ / "evr.csv");
  EXPECT_EQ(curve.rfind("# kind=FNMR threshold=", 0), 0u);
  EXPECT_NE(curve.find("\nx,y\n0,0.2\n"), std::string::npos) << curve;
  r = run({"evaluate", "roc", "--features", p("ws/features.csv"), "--scores", p("ws/scores.csv"), "--out",
           p("roc.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"complete", "--comparisons", p("ws/comparisons.csv"), "--rank", "3", "--seed", "2", "--out", p("hqv.csv"),
           "--matrix", p("matrix.csv"), "--report", p("report.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(load_quality(dir_ / "hqv.csv").empty());
}

TEST_F(Pipeline, RepeatRunsAreByteIdentical) {
  ASSERT_EQ(mqv().code, 0);
  ASSERT_EQ(train().code, 0);
  const std::string first_mqv = testing::read_text(dir_ / "mqv.csv");
  const std::string first_model = testing::read_text(dir_ / "model.json");
  ASSERT_EQ(mqv().code, 0);
  ASSERT_EQ(train().code, 0);
  EXPECT_EQ(testing::read_text(dir_ / "mqv.csv"), first_mqv);
  EXPECT_EQ(testing::read_text(dir_ / "model.json"), first_model);

  testing::TempDir other;
  ASSERT_EQ(run({"synth", "--subjects", "30", "--per-subject", "3", "--dim", "4", "--seed", "3", "--out",
                 (other / "ws").string(), "--workers", "4", "--comparisons-per-worker", "150"})
                .code,
            0);
  for (const char* f : {"features.csv", "scores.csv", "comparisons.csv"}) {
    EXPECT_EQ(testing::read_text(other / "ws" / f), testing::read_text(dir_ / "ws" / f));
  }
}

TEST_F(Pipeline, PredictWrongDimension) {
  ASSERT_EQ(mqv().code, 0);
  ASSERT_EQ(train().code, 0);
  testing::write_text(dir_ / "wide.csv", "image_id,subject_id,detect_ok,f0,f1,f2,f3,f4\nx,X,1,0,0,0,0,0\n");
  const Outcome r = run({"predict", "--model", p("model.json"), "--features", p("wide.csv"), "--out", p("q.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_DIM_MISMATCH", 0), 0u) << r.err;
}

TEST(Cli, CompleteWithIdleWorker) {
  testing::TempDir dir;
  testing::write_text(dir / "c.csv", "rater_id,left_id,right_id,response\nw1,a,b,LEFT\n");
  testing::write_text(dir / "w.csv", "image_id\nw1\nw2\n");
  const Outcome r = run({"complete", "--comparisons", (dir / "c.csv").string(), "--workers", (dir / "w.csv").string(),
                     "--rank", "1", "--seed", "0", "--out", (dir / "q.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_WORKER_NO_DATA", 0), 0u) << r.err;
}

TEST(Cli, NumericFailureExitsThree) {
  testing::TempDir dir;
  testing::write_text(dir / "f.csv", "image_id,subject_id,detect_ok,f0\na,A,1,0\nb,B,1,1\n");
  testing::write_text(dir / "t.csv", "image_id,quality\na,1\nb,1\n");
  testing::write_text(dir / "g.csv", "C,gamma,epsilon\n1,1,0.1\n");
  const Outcome r = run({"train", "--features", (dir / "f.csv").string(), "--targets", (dir / "t.csv").string(),
                     "--grid", (dir / "g.csv").string(), "--folds", "2", "--seed", "0", "--out",
                     (dir / "m.json").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, OfflineSessionRoundTrip) {
  testing::TempDir dir;
  testing::write_text(dir / "cfg.json",
                      R"({"n_tutorial":1,"n_random":3,"n_consistency":1,"seed":4,)"
                      R"("tutorial_bank":[{"left":"hi","right":"lo","expected":"LEFT"}]})");
  testing::write_text(dir / "pool.csv", "image_id\na\nb\nc\nd\n");
  const std::string ws = (dir / "ws").string();
  std::filesystem::create_directories(ws);
  std::filesystem::copy_file(dir / "pool.csv", dir / "ws" / "pool.csv");
  Outcome r = run({"session", "new", "--workspace", ws, "--session-config", (dir / "cfg.json").string(), "--rater", "r1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("\"session_id\":\"");
  ASSERT_NE(pos, std::string::npos) << r.out;
  const std::string id = r.out.substr(pos + 14, 16);
  const char* answers[] = {"LEFT_MUCH", "SIMILAR", "SIMILAR", "SIMILAR", "SIMILAR"};
  for (int i = 0; i < 5; ++i) {
    r = run({"session", "respond", "--workspace", ws, "--session", id, "--position", std::to_string(i), "--response",
             answers[i]});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  r = run({"session", "status", "--workspace", ws, "--session", id});
  EXPECT_NE(r.out.find("COMPLETE"), std::string::npos);
  r = run({"session", "respond", "--workspace", ws, "--session", id, "--position", "5", "--response", "SIMILAR"});
  EXPECT_EQ(r.code, 2);
  r = run({"session", "export", "--workspace", ws, "--out", (dir / "cmp.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(pairwise::load_comparisons(dir / "cmp.csv").size(), 4u);
}

}  // namespace
}  // namespace faceq::cli
