#include "faceq/svr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/random.hpp"
#include "faceq/stats.hpp"

namespace faceq::svr {

namespace {

constexpr double kTau = 1e-12;

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

// Kernel rows over the training set: fully materialised when the matrix fits
// the budget, otherwise an LRU row cache.
class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), n_(static_cast<std::size_t>(x.rows())) {
    const std::size_t row_bytes = n_ * sizeof(double);
    if (n_ * row_bytes <= budget_bytes) {
      full_ = Matrix(n_, n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const double k = compute(i, j);
          full_(i, j) = k;
          full_(j, i) = k;
        }
      }
      is_full_ = true;
    } else {
      capacity_ = std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(row_bytes, 1));
    }
  }

  const double* row(std::size_t i) {
    if (is_full_) return full_.row(i).data();
    auto it = cache_.find(i);
    if (it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first.data();
    }
    if (cache_.size() >= capacity_) {
      cache_.erase(lru_.back());
      lru_.pop_back();
    }
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = compute(i, j);
    lru_.push_front(i);
    auto& slot = cache_[i];
    slot.first = std::move(r);
    slot.second = lru_.begin();
    return slot.first.data();
  }

  bool is_full() const { return is_full_; }
  const Matrix& full() const { return full_; }

  Matrix materialise() {
    if (is_full_) return full_;
    Matrix k(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) k(i, j) = compute(i, j);
    }
    return k;
  }

 private:
  double compute(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    return std::exp(-gamma_ * squared_distance(x_.row(i).data(), x_.row(j).data(),
                                               static_cast<std::size_t>(x_.cols())));
  }

  const Matrix& x_;
  double gamma_;
  std::size_t n_;
  bool is_full_ = false;
  Matrix full_;
  std::size_t capacity_ = 0;
  std::list<std::size_t> lru_;
  std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> cache_;
};

// Decomposition solver over 2l variables: t < l is alpha_t (sign +1),
// t >= l is alpha*_{t-l} (sign -1). Minimises 1/2 a'Qa + p'a with
// Q_st = sign_s sign_t K(s mod l, t mod l), sum(sign * a) = 0, 0 <= a <= C.
// Working-set selection uses second-order information.
class PairwiseSolver {
 public:
  PairwiseSolver(KernelRows& kernel, std::span<const double> y, double epsilon, double c)
      : kernel_(kernel), l_(y.size()), c_(c), alpha_(2 * l_, 0.0), grad_(2 * l_), p_(2 * l_) {
    for (std::size_t i = 0; i < l_; ++i) {
      p_[i] = epsilon - y[i];
      p_[i + l_] = epsilon + y[i];
    }
    grad_ = p_;
  }

  // Returns false if the update cap was reached first.
  bool run(double tol, std::uint64_t max_updates) {
    while (updates_ < max_updates) {
      std::size_t i = 0, j = 0;
      if (!select(tol, &i, &j)) return true;
      step(i, j);
      ++updates_;
    }
    return false;
  }

  std::vector<double> beta() const {
    std::vector<double> b(l_);
    for (std::size_t i = 0; i < l_; ++i) b[i] = alpha_[i] - alpha_[i + l_];
    return b;
  }

  // Intercept of the decision function: mean over free variables of
  // -sign*G, or the midpoint of the feasible interval if none are free.
  double bias() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      const double yg = sign(t) * grad_[t];
      if (alpha_[t] >= c_) {
        if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (alpha_[t] <= 0.0) {
        if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    return -rho;
  }

  void set_beta(std::span<const double> beta) {
    for (std::size_t i = 0; i < l_; ++i) {
      alpha_[i] = std::max(beta[i], 0.0);
      alpha_[i + l_] = std::max(-beta[i], 0.0);
    }
  }

 private:
  static constexpr double sign_of(std::size_t t, std::size_t l) { return t < l ? 1.0 : -1.0; }
  double sign(std::size_t t) const { return sign_of(t, l_); }
  bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
  bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

  bool select(double tol, std::size_t* out_i, std::size_t* out_j) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = SIZE_MAX;
    for (std::size_t t = 0; t < l_; ++t) {
      if (!at_upper(t) && -grad_[t] >= gmax) { gmax = -grad_[t]; i = t; }
    }
    for (std::size_t t = l_; t < 2 * l_; ++t) {
      if (!at_lower(t) && grad_[t] >= gmax) { gmax = grad_[t]; i = t; }
    }
    if (i == SIZE_MAX) return false;

    const double* ki = kernel_.row(i % l_);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = SIZE_MAX;
    auto consider = [&](std::size_t t, double grad_diff, double k) {
      if (grad_diff > 0.0) {
        double quad = 2.0 - 2.0 * k;
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best) { best = obj; j = t; }
      }
    };
    for (std::size_t t = 0; t < l_; ++t) {
      if (at_lower(t)) continue;
      gmax2 = std::max(gmax2, grad_[t]);
      consider(t, gmax + grad_[t], ki[t]);
    }
    for (std::size_t t = l_; t < 2 * l_; ++t) {
      if (at_upper(t)) continue;
      gmax2 = std::max(gmax2, -grad_[t]);
      consider(t, gmax - grad_[t], ki[t - l_]);
    }
    violation_ = gmax + gmax2;
    if (violation_ < tol || j == SIZE_MAX) return false;
    *out_i = i;
    *out_j = j;
    return true;
  }

  void step(std::size_t i, std::size_t j) {
    const double* ki = kernel_.row(i % l_);
    const double* kj = kernel_.row(j % l_);
    const double qij = sign(i) * sign(j) * ki[j % l_];
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    const double c = c_;

    if (sign(i) != sign(j)) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else {
        if (aj > c) { aj = c; ai = c + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }

    const double di = (ai - old_i) * sign(i);
    const double dj = (aj - old_j) * sign(j);
    double* lower = grad_.data() + l_;
    for (std::size_t t = 0; t < l_; ++t) {
      const double d = di * ki[t] + dj * kj[t];
      grad_[t] += d;
      lower[t] -= d;
    }
  }

 public:
  double violation() const { return violation_; }
  std::uint64_t updates() const { return updates_; }

 private:
  KernelRows& kernel_;
  std::size_t l_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<double> p_;
  std::uint64_t updates_ = 0;
  double violation_ = std::numeric_limits<double>::infinity();
};

// Exact solve on the current active set: free coefficients keep their sign
// and satisfy f(x_i) = y_i - eps*sign exactly, bounded ones stay fixed.
// Accepted only if the result satisfies the KKT conditions everywhere.
bool refine_on_active_set(const Matrix& k, std::span<const double> y, const SvrParams& params,
                          std::vector<double>* beta, double* bias) {
  const std::size_t l = y.size();
  const double c = params.C;
  const double eps = params.epsilon;
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  const double slack = 1e-9 * (1.0 + ymax);

  std::vector<std::size_t> free_set;
  std::vector<double> b = *beta;
  for (std::size_t i = 0; i < l; ++i) {
    if (b[i] != 0.0 && std::abs(b[i]) < c) free_set.push_back(i);
  }

  double intercept = 0.0;
  if (!free_set.empty()) {
    const std::size_t f = free_set.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(f + 1, f + 1);
    Eigen::VectorXd rhs(f + 1);
    double bounded_sum = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      if (std::abs(b[j]) >= c) bounded_sum += b[j];
    }
    for (std::size_t r = 0; r < f; ++r) {
      const std::size_t i = free_set[r];
      double fixed = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        if (std::abs(b[j]) >= c) fixed += k(i, j) * b[j];
      }
      for (std::size_t s = 0; s < f; ++s) a(r, s) = k(i, free_set[s]);
      a(r, f) = 1.0;
      a(f, r) = 1.0;
      rhs(r) = y[i] - eps * (b[i] > 0.0 ? 1.0 : -1.0) - fixed;
    }
    rhs(f) = -bounded_sum;
    const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
    if (!sol.allFinite() || (a * sol - rhs).lpNorm<Eigen::Infinity>() > slack) return false;
    for (std::size_t r = 0; r < f; ++r) {
      const std::size_t i = free_set[r];
      const double v = sol(r);
      if ((v > 0.0) != (b[i] > 0.0) || std::abs(v) > c * (1.0 + 1e-12)) return false;
      b[i] = std::clamp(v, -c, c);
    }
    intercept = sol(f);
  }

  // Residuals r_i = y_i - sum_j K_ij b_j; the intercept must lie in every
  // row's admissible interval.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < l; ++i) {
    double kb = 0.0;
    for (std::size_t j = 0; j < l; ++j) kb += k(i, j) * b[j];
    const double r = y[i] - kb;
    if (b[i] == 0.0) {
      lo = std::max(lo, r - eps);
      hi = std::min(hi, r + eps);
    } else if (b[i] >= c) {
      hi = std::min(hi, r - eps);
    } else if (b[i] <= -c) {
      lo = std::max(lo, r + eps);
    }
  }
  if (free_set.empty()) {
    if (lo > hi + slack) return false;
    if (std::isinf(lo) && std::isinf(hi)) {
      intercept = *bias;
    } else if (std::isinf(lo)) {
      intercept = hi;
    } else if (std::isinf(hi)) {
      intercept = lo;
    } else {
      intercept = 0.5 * (lo + hi);
    }
  } else if (intercept < lo - slack || intercept > hi + slack) {
    return false;
  }
  *beta = std::move(b);
  *bias = intercept;
  return true;
}

}  // namespace

void SvrParams::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw Error(ErrorCode::kInvalidArgument, "C must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be non-negative");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  }
}

FeatureScaling FeatureScaling::fit(const Matrix& rows) {
  FeatureScaling s;
  const auto n = static_cast<double>(rows.rows());
  for (Eigen::Index k = 0; k < rows.cols(); ++k) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) m += rows(i, k);
    m /= n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) ss += (rows(i, k) - m) * (rows(i, k) - m);
    const double sd = std::sqrt(ss / n);
    s.shift.push_back(m);
    s.scale.push_back(sd > 1e-12 ? sd : 1.0);
  }
  return s;
}

std::vector<double> FeatureScaling::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - shift[k]) / scale[k];
  return out;
}

Matrix FeatureScaling::apply(const Matrix& rows) const {
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index k = 0; k < rows.cols(); ++k) out(i, k) = (rows(i, k) - shift[k]) / scale[k];
  }
  return out;
}

double rbf(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rbf of vectors with dimensions " +
                                                   std::to_string(x.size()) + " and " +
                                                   std::to_string(y.size()));
  }
  return std::exp(-gamma * squared_distance(x.data(), y.data(), x.size()));
}

double dual_objective(const Matrix& kernel, std::span<const double> targets,
                      std::span<const double> beta, double epsilon) {
  double quad = 0.0, linear = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) row += kernel(i, j) * beta[j];
    quad += beta[i] * row;
    linear += targets[i] * beta[i];
    l1 += std::abs(beta[i]);
  }
  return -0.5 * quad - epsilon * l1 + linear;
}

DualSolution solve_dual(const Matrix& scaled_features, std::span<const double> targets,
                        const SvrParams& params, const SolverOptions& options) {
  params.validate();
  const std::size_t l = targets.size();
  KernelRows kernel(scaled_features, params.gamma, options.cache_bytes);
  PairwiseSolver solver(kernel, targets, params.epsilon, params.C);

  DualSolution out;
  out.converged = solver.run(options.kkt_tol, options.max_updates);
  out.beta = solver.beta();
  out.bias = solver.bias();

  if (out.converged && l <= options.refine_max_rows) {
    const Matrix k = kernel.materialise();
    const double before = dual_objective(k, targets, out.beta, params.epsilon);
    double tol = options.kkt_tol;
    for (int attempt = 0; attempt < 10; ++attempt) {
      std::vector<double> beta = out.beta;
      double bias = out.bias;
      if (refine_on_active_set(k, targets, params, &beta, &bias) &&
          dual_objective(k, targets, beta, params.epsilon) >= before - 1e-10 * (1.0 + std::abs(before))) {
        out.beta = std::move(beta);
        out.bias = bias;
        break;
      }
      tol *= 0.1;
      if (tol < 1e-13) break;
      if (!solver.run(tol, options.max_updates)) break;
      out.beta = solver.beta();
      out.bias = solver.bias();
    }
    out.objective = dual_objective(k, targets, out.beta, params.epsilon);
  } else {
    // Objective from kernel rows of support vectors only.
    double quad = 0.0, linear = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
      if (out.beta[i] == 0.0) continue;
      const double* ki = kernel.row(i);
      double row = 0.0;
      for (std::size_t j = 0; j < l; ++j) row += ki[j] * out.beta[j];
      quad += out.beta[i] * row;
      linear += targets[i] * out.beta[i];
      l1 += std::abs(out.beta[i]);
    }
    out.objective = -0.5 * quad - params.epsilon * l1 + linear;
  }
  return out;
}

QualityModel train(const Matrix& features, std::span<const double> targets, const SvrParams& params,
                   const SolverOptions& options) {
  params.validate();
  if (static_cast<std::size_t>(features.rows()) != targets.size()) {
    throw Error(ErrorCode::kLengthMismatch, "feature rows and targets differ in length");
  }
  if (features.rows() < 2) throw Error(ErrorCode::kTooFewRows, "training needs at least 2 rows");
  if (features.cols() < 1) throw Error(ErrorCode::kDimensionMismatch, "training rows have no features");
  if (!features.allFinite() ||
      !std::all_of(targets.begin(), targets.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kNonFiniteInput, "training data contains non-finite values");
  }

  QualityModel model;
  model.params = params;
  model.scaling = FeatureScaling::fit(features);
  const Matrix scaled = model.scaling.apply(features);
  const DualSolution dual = solve_dual(scaled, targets, params, options);

  std::vector<Eigen::Index> support;
  for (std::size_t i = 0; i < dual.beta.size(); ++i) {
    if (dual.beta[i] != 0.0) support.push_back(static_cast<Eigen::Index>(i));
  }
  model.support_vectors = Matrix(static_cast<Eigen::Index>(support.size()), scaled.cols());
  for (std::size_t s = 0; s < support.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = scaled.row(support[s]);
    model.dual_coefs.push_back(dual.beta[support[s]]);
  }
  model.bias = dual.bias;
  model.converged = dual.converged;
  model.dual_objective = dual.objective;
  return model;
}

double predict(const QualityModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "model expects " + std::to_string(model.dim()) +
                                                   " features, got " + std::to_string(x.size()));
  }
  const std::vector<double> z = model.scaling.apply(x);
  const auto d = static_cast<std::size_t>(model.support_vectors.cols());
  double f = 0.0;
  for (std::size_t s = 0; s < model.dual_coefs.size(); ++s) {
    f += model.dual_coefs[s] *
         std::exp(-model.params.gamma *
                  squared_distance(z.data(), model.support_vectors.row(static_cast<Eigen::Index>(s)).data(), d));
  }
  return f + model.bias;
}

std::vector<double> predict(const QualityModel& model, const Matrix& rows) {
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out[i] = predict(model, std::span<const double>(rows.row(i).data(), static_cast<std::size_t>(rows.cols())));
  }
  return out;
}

std::vector<std::size_t> subject_disjoint_folds(std::span<const std::string> subject_ids,
                                                std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "fold count must be at least 2");
  std::vector<std::string> distinct;
  std::unordered_map<std::string, std::size_t> position;
  for (const auto& s : subject_ids) {
    if (position.emplace(s, distinct.size()).second) distinct.push_back(s);
  }
  if (distinct.size() < k) {
    throw Error(ErrorCode::kTooFewSubjects, std::to_string(distinct.size()) + " subjects cannot fill " +
                                                std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(distinct.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold_of_subject(distinct.size());
  for (std::size_t p = 0; p < order.size(); ++p) fold_of_subject[order[p]] = p % k;

  std::vector<std::size_t> folds(subject_ids.size());
  for (std::size_t i = 0; i < subject_ids.size(); ++i) folds[i] = fold_of_subject[position[subject_ids[i]]];
  return folds;
}

namespace {

Matrix take_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

GridCell evaluate_cell(const Matrix& x, std::span<const double> y, std::span<const std::size_t> folds,
                       std::size_t k, const SvrParams& params, const SolverOptions& solver) {
  GridCell cell;
  cell.params = params;
  try {
    params.validate();
    double rho_sum = 0.0, mse_sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_idx, test_idx;
      for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test_idx : train_idx).push_back(i);
      std::vector<double> y_train, y_test;
      for (auto i : train_idx) y_train.push_back(y[i]);
      for (auto i : test_idx) y_test.push_back(y[i]);
      const QualityModel model = train(take_rows(x, train_idx), y_train, params, solver);
      const std::vector<double> pred = predict(model, take_rows(x, test_idx));
      double rho = 0.0;
      try {
        rho = spearman(y_test, pred);
      } catch (const Error& e) {
        // A constant prediction (or a one-row fold) carries no ranking.
        if (e.code() != ErrorCode::kDegenerateConstantInput && e.code() != ErrorCode::kLengthMismatch) throw;
      }
      double mse = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) mse += (pred[i] - y_test[i]) * (pred[i] - y_test[i]);
      mse /= static_cast<double>(std::max<std::size_t>(pred.size(), 1));
      cell.fold_rhos.push_back(rho);
      rho_sum += rho;
      mse_sum += mse;
    }
    cell.mean_rho = rho_sum / static_cast<double>(k);
    cell.mean_mse = mse_sum / static_cast<double>(k);
  } catch (const Error& e) {
    cell.failed = true;
    cell.failure = std::string(error_code_name(e.code())) + ": " + e.what();
  }
  return cell;
}

bool better_cell(const GridCell& a, const GridCell& b) {
  if (a.mean_rho != b.mean_rho) return a.mean_rho > b.mean_rho;
  if (a.params.C != b.params.C) return a.params.C < b.params.C;
  if (a.params.gamma != b.params.gamma) return a.params.gamma < b.params.gamma;
  return a.params.epsilon > b.params.epsilon;
}

}  // namespace

GridSearchResult grid_search(const Matrix& features, std::span<const double> targets,
                             std::span<const std::string> subject_ids,
                             std::span<const SvrParams> grid, std::size_t k, std::uint64_t seed,
                             const GridOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "parameter grid is empty");
  if (static_cast<std::size_t>(features.rows()) != targets.size() || targets.size() != subject_ids.size()) {
    throw Error(ErrorCode::kLengthMismatch, "features, targets and subjects differ in length");
  }
  const std::vector<std::size_t> folds = subject_disjoint_folds(subject_ids, k, seed);

  GridSearchResult result;
  result.cells.resize(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < grid.size(); c = next++) {
      result.cells[c] = evaluate_cell(features, targets, folds, k, grid[c], options.solver);
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, grid.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  bool found = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (result.cells[c].failed) continue;
    if (!found || better_cell(result.cells[c], result.cells[result.best_index])) {
      result.best_index = c;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::kGridExhausted, "every grid cell failed");
  result.best = grid[result.best_index];
  result.model = train(features, targets, result.best, options.solver);
  result.model.target_kind = options.target_kind;
  result.model.meta = {seed, k};
  return result;
}

std::vector<SvrParams> default_grid() {
  std::vector<SvrParams> grid;
  for (double c : {0.1, 1.0, 10.0, 100.0}) {
    for (int e = -7; e <= 1; e += 2) {
      for (double eps : {0.01, 0.1, 0.3}) grid.push_back({c, eps, std::ldexp(1.0, e)});
    }
  }
  return grid;
}

std::vector<SvrParams> load_grid(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"C", "gamma", "epsilon"});
  std::vector<SvrParams> grid;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = table.source + " row " + std::to_string(i + 1);
    if (row.size() != 3) throw Error(ErrorCode::kMalformedRow, ctx + ": expected 3 fields");
    grid.push_back({csv::parse_double(row[0], ctx), csv::parse_double(row[2], ctx),
                    csv::parse_double(row[1], ctx)});
  }
  return grid;
}

namespace {

constexpr const char* kFormatTag = "faceq-svr-model";

const char* target_name(TargetKind k) { return k == TargetKind::kHqv ? "HQV" : "MQV"; }

}  // namespace

std::string serialize_model(const QualityModel& model) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = kModelFormatVersion;
  j["params"] = {{"C", model.params.C}, {"epsilon", model.params.epsilon}, {"gamma", model.params.gamma}};
  j["target_kind"] = target_name(model.target_kind);
  j["training"] = {{"seed", model.meta.seed}, {"folds", model.meta.folds}};
  j["converged"] = model.converged;
  j["dual_objective"] = model.dual_objective;
  j["scaling"] = {{"shift", model.scaling.shift}, {"scale", model.scaling.scale}};
  j["bias"] = model.bias;
  j["dual_coefs"] = model.dual_coefs;
  nlohmann::json svs = nlohmann::json::array();
  for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s) {
    const auto row = model.support_vectors.row(s);
    svs.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["support_vectors"] = std::move(svs);
  return j.dump(1) + "\n";
}

QualityModel deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedModelFile, std::string("model file is not valid: ") + e.what());
  }
  try {
    if (!j.is_object() || j.at("format").get<std::string>() != kFormatTag) {
      throw Error(ErrorCode::kMalformedModelFile, "not a faceq SVR model");
    }
    if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, "unsupported model format version " + j.at("version").dump());
    }
    QualityModel m;
    m.params.C = j.at("params").at("C").get<double>();
    m.params.epsilon = j.at("params").at("epsilon").get<double>();
    m.params.gamma = j.at("params").at("gamma").get<double>();
    const auto kind = j.at("target_kind").get<std::string>();
    if (kind != "HQV" && kind != "MQV") throw Error(ErrorCode::kMalformedModelFile, "bad target_kind");
    m.target_kind = kind == "HQV" ? TargetKind::kHqv : TargetKind::kMqv;
    m.meta.seed = j.at("training").at("seed").get<std::uint64_t>();
    m.meta.folds = j.at("training").at("folds").get<std::size_t>();
    m.converged = j.at("converged").get<bool>();
    m.dual_objective = j.at("dual_objective").get<double>();
    m.scaling.shift = j.at("scaling").at("shift").get<std::vector<double>>();
    m.scaling.scale = j.at("scaling").at("scale").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    const auto& svs = j.at("support_vectors");
    const std::size_t d = m.scaling.shift.size();
    if (m.scaling.scale.size() != d || svs.size() != m.dual_coefs.size()) {
      throw Error(ErrorCode::kMalformedModelFile, "model arrays have inconsistent sizes");
    }
    m.support_vectors = Matrix(static_cast<Eigen::Index>(svs.size()), static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < svs.size(); ++s) {
      const auto row = svs[s].get<std::vector<double>>();
      if (row.size() != d) throw Error(ErrorCode::kMalformedModelFile, "support vector has wrong dimension");
      for (std::size_t k = 0; k < d; ++k) m.support_vectors(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = row[k];
    }
    for (double s : m.scaling.scale) {
      if (!(s > 0.0)) throw Error(ErrorCode::kMalformedModelFile, "non-positive feature scale");
    }
    m.params.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedModelFile, std::string("model file is incomplete: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kMalformedModelFile, e.what());
    throw;
  }
}

void save_model(const QualityModel& model, const std::filesystem::path& path) {
  csv::write_file(path, serialize_model(model));
}

QualityModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace faceq::svr
