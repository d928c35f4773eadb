#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faceq/corpus.hpp"
#include "faceq/pairwise.hpp"

namespace faceq::matcomp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Completed worker x image quality ratings.
struct RatingMatrix {
  Matrix values;
  std::vector<std::string> worker_ids;
  std::vector<std::string> image_ids;
  std::size_t rank_used = 0;
};

struct CompletionParams {
  std::size_t rank = 5;
  double margin = 1.0;          // required gap for LEFT/RIGHT verdicts
  double similar_weight = 1.0;  // pull strength for SIMILAR verdicts
  double l2_reg = 0.01;
  double learn_rate = 0.01;     // initial step; adapted during descent
  std::size_t max_iters = 5000;
  double tol = 1e-6;            // relative objective change
  std::uint64_t seed = 0;

  void validate() const;
};

struct CompletionResult {
  RatingMatrix matrix;
  double objective = 0.0;
  // Objective after each accepted step, starting with the initial point.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
  // Images no comparison refers to; their values come from the factors alone.
  std::vector<std::string> uncovered;
};

// Fits F = U V^T (U: workers x r, V: images x r) to the comparisons by
// minimising a squared-hinge ranking loss plus L2 on the factors. Each step
// is full-batch gradient descent; a step that would raise the objective is
// rejected and retried with half the step size.
CompletionResult complete_matrix(std::span<const pairwise::Comparison> comparisons,
                                 std::span<const std::string> worker_ids,
                                 std::span<const std::string> image_ids,
                                 const CompletionParams& params);

// ceil(r * log10(m)): per-worker sample-size guidance for rank-r completion.
std::size_t required_comparisons(std::size_t rank, std::size_t images);

// Min-max scale each row onto [0, 1]; constant rows become 0.5.
RatingMatrix normalize_worker_rows(RatingMatrix matrix);

enum class Aggregate { kMedian, kMean, kMin, kMax };
Aggregate parse_aggregate(std::string_view name);

QualityAssignment aggregate(const RatingMatrix& matrix, Aggregate how);
inline QualityAssignment aggregate_median(const RatingMatrix& matrix) {
  return aggregate(matrix, Aggregate::kMedian);
}

struct Concordance {
  // Spearman rho per worker pair (i < j), row-major over i then j.
  std::vector<double> rhos;
  double mean = 0.0;
  // Pairs skipped because a row was constant.
  std::size_t degenerate_pairs = 0;
};

// Throws TooFewWorkers when n < 2.
Concordance worker_concordance(const RatingMatrix& matrix);

// Long form: header `worker_id,image_id,rating`.
void save_matrix(const RatingMatrix& matrix, const std::filesystem::path& path);

}  // namespace faceq::matcomp
