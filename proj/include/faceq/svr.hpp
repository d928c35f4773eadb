#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace faceq::svr {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  double gamma = 1.0;

  void validate() const;  // throws InvalidArgument
  friend bool operator==(const SvrParams&, const SvrParams&) = default;
};

enum class TargetKind { kHqv, kMqv };

struct FeatureScaling {
  std::vector<double> shift;
  std::vector<double> scale;  // strictly positive

  static FeatureScaling fit(const Matrix& rows);
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& rows) const;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::size_t folds = 0;
};

struct SolverOptions {
  double kkt_tol = 1e-3;
  std::uint64_t max_updates = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
  // After the decomposition solver stops, small problems get an exact
  // active-set solve so the result sits on the true optimum.
  std::size_t refine_max_rows = 2000;
};

struct QualityModel {
  SvrParams params;
  FeatureScaling scaling;
  Matrix support_vectors;  // already scaled
  std::vector<double> dual_coefs;  // alpha - alpha*, one per support vector
  double bias = 0.0;
  TargetKind target_kind = TargetKind::kHqv;
  TrainingMeta meta;
  bool converged = true;
  double dual_objective = 0.0;

  std::size_t dim() const { return scaling.shift.size(); }
};

// exp(-gamma * |x - y|^2). Throws DimensionMismatch.
double rbf(std::span<const double> x, std::span<const double> y, double gamma);

// Epsilon-SVR dual,
//   max  -1/2 b'Kb - eps |b|_1 + y'b   s.t. sum(b) = 0, |b_i| <= C,
// solved by pairwise decomposition over the split (alpha, alpha*) form.
// A model that hit the update cap is returned with converged = false.
QualityModel train(const Matrix& features, std::span<const double> targets, const SvrParams& params,
                   const SolverOptions& options = {});

// Dual coefficients for every training row (zero for non-support rows) and
// the dual objective, for callers that compare against other solvers.
struct DualSolution {
  std::vector<double> beta;
  double bias = 0.0;
  double objective = 0.0;
  bool converged = true;
};
DualSolution solve_dual(const Matrix& scaled_features, std::span<const double> targets,
                        const SvrParams& params, const SolverOptions& options = {});

double dual_objective(const Matrix& kernel, std::span<const double> targets,
                      std::span<const double> beta, double epsilon);

double predict(const QualityModel& model, std::span<const double> x);
std::vector<double> predict(const QualityModel& model, const Matrix& rows);

// Fold index per row; all rows of a subject share a fold and folds differ by
// at most one subject. Throws TooFewSubjects.
std::vector<std::size_t> subject_disjoint_folds(std::span<const std::string> subject_ids,
                                                std::size_t k, std::uint64_t seed);

struct GridCell {
  SvrParams params;
  double mean_rho = 0.0;
  double mean_mse = 0.0;
  std::vector<double> fold_rhos;
  bool failed = false;
  std::string failure;
};

struct GridOptions {
  std::size_t jobs = 1;
  SolverOptions solver;
  TargetKind target_kind = TargetKind::kHqv;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  SvrParams best;
  std::vector<GridCell> cells;
  QualityModel model;  // retrained on every row with `best`
};

// Scores each cell by mean held-out Spearman rho over k subject-disjoint
// folds. Ties go to smaller C, then smaller gamma, then larger epsilon.
// Throws GridExhausted when every cell fails.
GridSearchResult grid_search(const Matrix& features, std::span<const double> targets,
                             std::span<const std::string> subject_ids,
                             std::span<const SvrParams> grid, std::size_t k, std::uint64_t seed,
                             const GridOptions& options = {});

// C in {0.1, 1, 10, 100}, gamma in {2^-7, 2^-5, 2^-3, 2^-1, 2^1},
// epsilon in {0.01, 0.1, 0.3}.
std::vector<SvrParams> default_grid();

// Grid file: header `C,gamma,epsilon`, one cell per row.
std::vector<SvrParams> load_grid(const std::filesystem::path& path);

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const QualityModel& model);
QualityModel deserialize_model(const std::string& text);
void save_model(const QualityModel& model, const std::filesystem::path& path);
QualityModel load_model(const std::filesystem::path& path);

}  // namespace faceq::svr
