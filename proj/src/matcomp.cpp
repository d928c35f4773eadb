#include "faceq/matcomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/random.hpp"
#include "faceq/stats.hpp"

namespace faceq::matcomp {

namespace {

struct IndexedComparison {
  std::size_t worker;
  std::size_t left;
  std::size_t right;
  pairwise::Coarse verdict;
};

// Loss and d(loss)/d(delta) for delta = F[w,left] - F[w,right].
inline double comparison_loss(pairwise::Coarse c, double delta, const CompletionParams& p,
                              double* slope) {
  switch (c) {
    case pairwise::Coarse::kLeft: {
      const double gap = std::max(0.0, p.margin - delta);
      *slope = -2.0 * gap;
      return gap * gap;
    }
    case pairwise::Coarse::kRight: {
      const double gap = std::max(0.0, p.margin + delta);
      *slope = 2.0 * gap;
      return gap * gap;
    }
    case pairwise::Coarse::kSimilar:
      *slope = 2.0 * p.similar_weight * delta;
      return p.similar_weight * delta * delta;
  }
  *slope = 0.0;
  return 0.0;
}

class Objective {
 public:
  Objective(std::span<const IndexedComparison> data, const CompletionParams& params, std::size_t rank)
      : data_(data), params_(params), rank_(rank) {}

  double value(const Matrix& u, const Matrix& v) const {
    double total = 0.0;
    double slope = 0.0;
    for (const auto& c : data_) total += comparison_loss(c.verdict, delta(u, v, c), params_, &slope);
    return total + params_.l2_reg * (u.squaredNorm() + v.squaredNorm());
  }

  void gradient(const Matrix& u, const Matrix& v, Matrix* gu, Matrix* gv) const {
    *gu = 2.0 * params_.l2_reg * u;
    *gv = 2.0 * params_.l2_reg * v;
    double slope = 0.0;
    for (const auto& c : data_) {
      comparison_loss(c.verdict, delta(u, v, c), params_, &slope);
      if (slope == 0.0) continue;
      const double* uw = u.row(c.worker).data();
      const double* vl = v.row(c.left).data();
      const double* vr = v.row(c.right).data();
      double* guw = gu->row(c.worker).data();
      double* gvl = gv->row(c.left).data();
      double* gvr = gv->row(c.right).data();
      for (std::size_t k = 0; k < rank_; ++k) {
        guw[k] += slope * (vl[k] - vr[k]);
        gvl[k] += slope * uw[k];
        gvr[k] -= slope * uw[k];
      }
    }
  }

 private:
  double delta(const Matrix& u, const Matrix& v, const IndexedComparison& c) const {
    const double* uw = u.row(c.worker).data();
    const double* vl = v.row(c.left).data();
    const double* vr = v.row(c.right).data();
    double d = 0.0;
    for (std::size_t k = 0; k < rank_; ++k) d += uw[k] * (vl[k] - vr[k]);
    return d;
  }

  std::span<const IndexedComparison> data_;
  const CompletionParams& params_;
  std::size_t rank_;
};

}  // namespace

void CompletionParams::validate() const {
  if (rank < 1) throw Error(ErrorCode::kInvalidArgument, "rank must be at least 1");
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be positive");
  if (!(similar_weight >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "similar_weight must be >= 0");
  if (!(l2_reg >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "l2_reg must be >= 0");
  if (!(learn_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learn_rate must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
}

CompletionResult complete_matrix(std::span<const pairwise::Comparison> comparisons,
                                 std::span<const std::string> worker_ids,
                                 std::span<const std::string> image_ids,
                                 const CompletionParams& params) {
  params.validate();
  const std::size_t n = worker_ids.size();
  const std::size_t m = image_ids.size();
  if (n < 1 || m < 2) {
    throw Error(ErrorCode::kInvalidArgument, "completion needs >= 1 worker and >= 2 images");
  }
  std::unordered_map<std::string, std::size_t> worker_index;
  std::unordered_map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!worker_index.emplace(worker_ids[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate worker id '" + worker_ids[i] + "'");
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!image_index.emplace(image_ids[j], j).second) {
      throw Error(ErrorCode::kDuplicateImageId, "duplicate image id '" + image_ids[j] + "'");
    }
  }

  std::vector<IndexedComparison> data;
  data.reserve(comparisons.size());
  std::vector<std::size_t> per_worker(n, 0);
  std::vector<bool> covered(m, false);
  for (const auto& c : comparisons) {
    const auto w = worker_index.find(c.rater_id);
    if (w == worker_index.end()) {
      throw Error(ErrorCode::kUnknownReference, "comparison names unknown worker '" + c.rater_id + "'");
    }
    const auto l = image_index.find(c.left_id);
    const auto r = image_index.find(c.right_id);
    if (l == image_index.end() || r == image_index.end()) {
      const std::string& bad = l == image_index.end() ? c.left_id : c.right_id;
      throw Error(ErrorCode::kUnknownReference, "comparison names unknown image '" + bad + "'");
    }
    if (l->second == r->second) {
      throw Error(ErrorCode::kInvalidArgument, "comparison of image '" + c.left_id + "' with itself");
    }
    data.push_back({w->second, l->second, r->second, c.response});
    ++per_worker[w->second];
    covered[l->second] = true;
    covered[r->second] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (per_worker[i] == 0) {
      throw Error(ErrorCode::kWorkerWithoutData, "worker '" + worker_ids[i] + "' has no comparisons");
    }
  }

  const std::size_t rank = std::min({params.rank, n, m});
  // Each factor row is seeded from its own id so relabelling permutes rows only.
  Matrix u(n, rank);
  Matrix v(m, rank);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(params.seed, stable_hash(worker_ids[i], 0x57)));
    for (std::size_t k = 0; k < rank; ++k) u(i, k) = rng.uniform(-0.1, 0.1);
  }
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(mix_seed(params.seed, stable_hash(image_ids[j], 0x49)));
    for (std::size_t k = 0; k < rank; ++k) v(j, k) = rng.uniform(-0.1, 0.1);
  }

  const Objective objective(data, params, rank);
  CompletionResult result;
  double current = objective.value(u, v);
  result.objective_trace.push_back(current);

  double step = params.learn_rate;
  Matrix gu, gv, u_next, v_next;
  bool need_gradient = true;
  for (std::size_t iter = 0; iter < params.max_iters; ++iter) {
    result.iterations = iter + 1;
    if (need_gradient) objective.gradient(u, v, &gu, &gv);
    u_next = u - step * gu;
    v_next = v - step * gv;
    const double next = objective.value(u_next, v_next);
    if (next <= current) {
      const double change = (current - next) / std::max(current, std::numeric_limits<double>::min());
      u.swap(u_next);
      v.swap(v_next);
      current = next;
      result.objective_trace.push_back(current);
      need_gradient = true;
      step *= 1.25;
      if (change < params.tol) {
        result.converged = true;
        break;
      }
    } else {
      need_gradient = false;
      step *= 0.5;
      if (step < 1e-300) {
        result.converged = true;
        break;
      }
    }
  }

  result.objective = current;
  result.matrix.values = u * v.transpose();
  result.matrix.worker_ids.assign(worker_ids.begin(), worker_ids.end());
  result.matrix.image_ids.assign(image_ids.begin(), image_ids.end());
  result.matrix.rank_used = rank;
  for (std::size_t j = 0; j < m; ++j) {
    if (!covered[j]) result.uncovered.push_back(image_ids[j]);
  }
  return result;
}

std::size_t required_comparisons(std::size_t rank, std::size_t images) {
  if (images < 1) throw Error(ErrorCode::kInvalidArgument, "image count must be at least 1");
  const double x = static_cast<double>(rank) * std::log10(static_cast<double>(images));
  // absorb rounding so exact products like 1 * log10(10) stay exact
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

RatingMatrix normalize_worker_rows(RatingMatrix matrix) {
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    auto row = matrix.values.row(i);
    const double lo = row.minCoeff();
    const double hi = row.maxCoeff();
    if (hi > lo) {
      row = (row.array() - lo) / (hi - lo);
    } else {
      row.setConstant(0.5);
    }
  }
  return matrix;
}

Aggregate parse_aggregate(std::string_view name) {
  if (name == "median") return Aggregate::kMedian;
  if (name == "mean") return Aggregate::kMean;
  if (name == "min") return Aggregate::kMin;
  if (name == "max") return Aggregate::kMax;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregate '" + std::string(name) + "'");
}

QualityAssignment aggregate(const RatingMatrix& matrix, Aggregate how) {
  if (matrix.values.rows() < 1) throw Error(ErrorCode::kTooFewWorkers, "aggregation needs >= 1 worker");
  QualityAssignment out;
  std::vector<double> column(static_cast<std::size_t>(matrix.values.rows()));
  for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) column[i] = matrix.values(i, j);
    double q = 0.0;
    switch (how) {
      case Aggregate::kMedian: q = median(column); break;
      case Aggregate::kMean: q = mean(column); break;
      case Aggregate::kMin: q = *std::min_element(column.begin(), column.end()); break;
      case Aggregate::kMax: q = *std::max_element(column.begin(), column.end()); break;
    }
    out.set(matrix.image_ids[j], q);
  }
  return out;
}

Concordance worker_concordance(const RatingMatrix& matrix) {
  const Eigen::Index n = matrix.values.rows();
  if (n < 2) throw Error(ErrorCode::kTooFewWorkers, "concordance needs at least 2 workers");
  Concordance out;
  std::vector<std::vector<double>> rows(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rows[i].assign(matrix.values.row(i).data(), matrix.values.row(i).data() + matrix.values.cols());
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      try {
        const double rho = spearman(rows[i], rows[j]);
        out.rhos.push_back(rho);
        sum += rho;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateConstantInput) throw;
        ++out.degenerate_pairs;
      }
    }
  }
  out.mean = out.rhos.empty() ? 0.0 : sum / static_cast<double>(out.rhos.size());
  return out;
}

void save_matrix(const RatingMatrix& matrix, const std::filesystem::path& path) {
  std::string out = "worker_id,image_id,rating\n";
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      out += matrix.worker_ids[i] + ',' + matrix.image_ids[j] + ',' + csv::format(matrix.values(i, j)) + '\n';
    }
  }
  csv::write_file(path, out);
}

}  // namespace faceq::matcomp
