#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faceq/error.hpp"
#include "faceq/matcomp.hpp"
#include "faceq/random.hpp"
#include "faceq/stats.hpp"
#include "test_support.hpp"

namespace faceq::matcomp {
namespace {

using pairwise::Coarse;
using pairwise::Comparison;

CompletionParams quick_params() {
  CompletionParams p;
  p.rank = 2;
  p.max_iters = 3000;
  p.seed = 3;
  return p;
}

RatingMatrix matrix_of(std::initializer_list<std::initializer_list<double>> rows) {
  RatingMatrix r;
  const std::size_t n = rows.size(), m = rows.begin()->size();
  r.values.resize(n, m);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) r.values(i, j++) = v;
    r.worker_ids.push_back("w" + std::to_string(i));
    ++i;
  }
  for (std::size_t j = 0; j < m; ++j) r.image_ids.push_back("i" + std::to_string(j));
  return r;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

TEST(Complete, ChainOrdersRow) {
  const std::vector<Comparison> cs{{"w", "a", "b", Coarse::kLeft}, {"w", "b", "c", Coarse::kLeft}};
  const std::vector<std::string> workers{"w"}, images{"a", "b", "c"};
  const auto r = complete_matrix(cs, workers, images, quick_params());
  const auto& f = r.matrix.values;
  EXPECT_GT(f(0, 0), f(0, 1));
  EXPECT_GT(f(0, 1), f(0, 2));
  EXPECT_TRUE(r.uncovered.empty());
}

TEST(Complete, RightVerdictFlipsOrder) {
  const std::vector<Comparison> cs{{"w", "a", "b", Coarse::kRight}};
  const std::vector<std::string> workers{"w"}, images{"a", "b", "z"};
  const auto r = complete_matrix(cs, workers, images, quick_params());
  EXPECT_LT(r.matrix.values(0, 0), r.matrix.values(0, 1));
  EXPECT_EQ(r.uncovered, (std::vector<std::string>{"z"}));
}

TEST(Complete, UnknownImage) {
  const std::vector<Comparison> cs{{"w", "a", "ghost", Coarse::kLeft}};
  const std::vector<std::string> workers{"w"}, images{"a", "b"};
  EXPECT_EQ(code_of([&] { complete_matrix(cs, workers, images, quick_params()); }), ErrorCode::kUnknownReference);
}

TEST(Complete, UnknownWorker) {
  const std::vector<Comparison> cs{{"x", "a", "b", Coarse::kLeft}};
  const std::vector<std::string> workers{"w"}, images{"a", "b"};
  EXPECT_EQ(code_of([&] { complete_matrix(cs, workers, images, quick_params()); }), ErrorCode::kUnknownReference);
}

TEST(Complete, WorkerWithoutData) {
  const std::vector<Comparison> cs{{"w", "a", "b", Coarse::kLeft}};
  const std::vector<std::string> workers{"w", "idle"}, images{"a", "b"};
  EXPECT_EQ(code_of([&] { complete_matrix(cs, workers, images, quick_params()); }), ErrorCode::kWorkerWithoutData);
}

TEST(Complete, InvalidParams) {
  CompletionParams p;
  p.margin = 0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::kInvalidArgument);
  p = {};
  p.rank = 0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::kInvalidArgument);
}

struct Synthetic {
  std::vector<Comparison> comparisons;
  std::vector<std::string> workers, images;
  Matrix truth;
};

Synthetic synthetic(std::size_t n, std::size_t m, std::size_t per_worker, std::uint64_t seed) {
  Rng rng(seed);
  Synthetic s;
  Matrix a(n, 2), b(m, 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  s.truth = a * b.transpose();
  for (std::size_t i = 0; i < n; ++i) s.workers.push_back("w" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) s.images.push_back("im" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < per_worker; ++k) {
      const auto l = rng.index(m);
      auto r = rng.index(m - 1);
      if (r >= l) ++r;
      const Coarse c = s.truth(i, l) > s.truth(i, r) ? Coarse::kLeft : Coarse::kRight;
      s.comparisons.push_back({s.workers[i], s.images[l], s.images[r], c});
    }
  }
  return s;
}

TEST(Complete, ObjectiveNonIncreasing) {
  const auto s = synthetic(4, 30, 80, 8);
  const auto r = complete_matrix(s.comparisons, s.workers, s.images, quick_params());
  ASSERT_GE(r.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1]);
  }
  EXPECT_EQ(r.objective, r.objective_trace.back());
}

TEST(Complete, RecoversLowRankOrdering) {
  const auto s = synthetic(6, 40, 150, 21);
  const auto r = complete_matrix(s.comparisons, s.workers, s.images, quick_params());
  for (std::size_t i = 0; i < s.workers.size(); ++i) {
    const Eigen::VectorXd got = r.matrix.values.row(i).transpose();
    const Eigen::VectorXd want = s.truth.row(i).transpose();
    EXPECT_GT(spearman({got.data(), std::size_t(got.size())}, {want.data(), std::size_t(want.size())}), 0.85);
  }
}

TEST(Complete, DeterministicPerSeed) {
  const auto s = synthetic(3, 20, 40, 2);
  const auto a = complete_matrix(s.comparisons, s.workers, s.images, quick_params());
  const auto b = complete_matrix(s.comparisons, s.workers, s.images, quick_params());
  EXPECT_TRUE(a.matrix.values == b.matrix.values);
}

TEST(Complete, LabelInvariance) {
  const auto s = synthetic(3, 25, 60, 5);
  auto p = quick_params();
  p.max_iters = 400;
  const auto base = complete_matrix(s.comparisons, s.workers, s.images, p);
  std::vector<std::size_t> perm(s.images.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(99);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::string> permuted;
  for (auto k : perm) permuted.push_back(s.images[k]);
  const auto moved = complete_matrix(s.comparisons, s.workers, permuted, p);
  for (std::size_t i = 0; i < s.workers.size(); ++i) {
    for (std::size_t j = 0; j < perm.size(); ++j) {
      EXPECT_NEAR(moved.matrix.values(i, j), base.matrix.values(i, perm[j]), 1e-9);
    }
  }
}

TEST(Complete, MarginScalePreservesChainRanking) {
  const std::vector<Comparison> cs{{"w", "a", "b", Coarse::kLeft},
                                   {"w", "b", "c", Coarse::kLeft},
                                   {"w", "c", "d", Coarse::kLeft}};
  const std::vector<std::string> workers{"w"}, images{"a", "b", "c", "d"};
  for (double margin : {1.0, 2.0}) {
    auto p = quick_params();
    p.margin = margin;
    const auto f = complete_matrix(cs, workers, images, p).matrix.values;
    EXPECT_GT(f(0, 0), f(0, 1));
    EXPECT_GT(f(0, 1), f(0, 2));
    EXPECT_GT(f(0, 2), f(0, 3));
  }
}

TEST(Required, Examples) {
  EXPECT_EQ(required_comparisons(194, 13233), 800u);
  EXPECT_EQ(required_comparisons(0, 10), 0u);
  EXPECT_EQ(required_comparisons(1, 10), 1u);
}

TEST(Normalize, Rows) {
  const auto r = normalize_worker_rows(matrix_of({{0.2, 0.6, 1.0}, {3, 3, 3}}));
  EXPECT_NEAR(r.values(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(r.values(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(r.values(0, 2), 1.0, 1e-15);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(r.values(1, j), 0.5);
  const auto two = normalize_worker_rows(matrix_of({{-1, 1}}));
  EXPECT_EQ(two.values(0, 0), 0.0);
  EXPECT_EQ(two.values(0, 1), 1.0);
}

TEST(Normalize, Idempotent) {
  const auto once = normalize_worker_rows(matrix_of({{0.3, -2, 7, 1}, {5, 5, 5, 5}, {1, 2, 3, 4}}));
  const auto twice = normalize_worker_rows(once);
  EXPECT_TRUE(once.values == twice.values);
}

TEST(Aggregate, MedianColumns) {
  const auto q = aggregate_median(matrix_of({{0.1, 0.2}, {0.4, 0.8}, {0.9, 0.5}}));
  EXPECT_DOUBLE_EQ(q.at("i0"), 0.4);
  EXPECT_DOUBLE_EQ(q.at("i1"), 0.5);
  const auto even = aggregate_median(matrix_of({{0.2}, {0.8}}));
  EXPECT_DOUBLE_EQ(even.at("i0"), 0.5);
  const auto single = aggregate_median(matrix_of({{0.7, 0.1, 0.3}}));
  EXPECT_EQ(single.at("i0"), 0.7);
  EXPECT_EQ(single.at("i2"), 0.3);
}

TEST(Aggregate, OtherRules) {
  const auto m = matrix_of({{0.1, 0.2}, {0.4, 0.8}, {0.9, 0.5}});
  EXPECT_DOUBLE_EQ(aggregate(m, Aggregate::kMean).at("i0"), 1.4 / 3);
  EXPECT_DOUBLE_EQ(aggregate(m, Aggregate::kMin).at("i1"), 0.2);
  EXPECT_DOUBLE_EQ(aggregate(m, parse_aggregate("max")).at("i1"), 0.8);
  EXPECT_EQ(code_of([] { parse_aggregate("mode"); }), ErrorCode::kInvalidArgument);
}

TEST(Concordance, IdenticalAndReversed) {
  const auto same = worker_concordance(matrix_of({{1, 2, 3}, {1, 2, 3}}));
  ASSERT_EQ(same.rhos.size(), 1u);
  EXPECT_DOUBLE_EQ(same.rhos[0], 1.0);
  EXPECT_DOUBLE_EQ(same.mean, 1.0);
  EXPECT_DOUBLE_EQ(worker_concordance(matrix_of({{1, 2, 3}, {3, 2, 1}})).rhos[0], -1.0);
  EXPECT_EQ(code_of([] { worker_concordance(matrix_of({{1, 2}})); }), ErrorCode::kTooFewWorkers);
}

TEST(Concordance, MatchesPairwiseDefinition) {
  Rng rng(7);
  RatingMatrix m = matrix_of({{0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}});
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = rng.uniform(0, 1);
  const auto c = worker_concordance(m);
  ASSERT_EQ(c.rhos.size(), 3u);
  std::size_t k = 0;
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const Eigen::VectorXd a = m.values.row(i).transpose(), b = m.values.row(j).transpose();
      // no ties here, so the squared rank-gap formula is exact
      std::vector<double> ra(6), rb(6);
      for (int x = 0; x < 6; ++x) {
        for (int y = 0; y < 6; ++y) {
          ra[x] += a[y] <= a[x];
          rb[x] += b[y] <= b[x];
        }
      }
      double d2 = 0;
      for (int x = 0; x < 6; ++x) d2 += (ra[x] - rb[x]) * (ra[x] - rb[x]);
      const double rho = 1 - 6 * d2 / (6 * 35.0);
      EXPECT_NEAR(c.rhos[k++], rho, 1e-12);
      sum += rho;
    }
  }
  EXPECT_NEAR(c.mean, sum / 3, 1e-12);
}

TEST(Matrix, SaveLongForm) {
  testing::TempDir dir;
  save_matrix(matrix_of({{0.5, 0.25}}), dir / "m.csv");
  EXPECT_EQ(testing::read_text(dir / "m.csv"), "worker_id,image_id,rating\nw0,i0,0.5\nw0,i1,0.25\n");
}

}  // namespace
}  // namespace faceq::matcomp
