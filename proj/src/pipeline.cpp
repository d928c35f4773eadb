#include "faceq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/random.hpp"
#include "faceq/stats.hpp"

namespace faceq::pipeline {

svr::Matrix feature_matrix(const FeatureCorpus& corpus) {
  svr::Matrix x(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(corpus.dim()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus.records()[i].features;
    for (std::size_t k = 0; k < f.size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f[k];
  }
  return x;
}

std::vector<double> targets_for(const FeatureCorpus& corpus, const QualityAssignment& targets) {
  std::vector<double> y;
  y.reserve(corpus.size());
  for (const auto& r : corpus.records()) {
    const auto q = targets.find(r.image_id);
    if (!q) throw Error(ErrorCode::kMissingTarget, "no target for '" + r.image_id + "'");
    y.push_back(*q);
  }
  return y;
}

HqvResult human_quality(std::span<const pairwise::Comparison> comparisons,
                        const matcomp::CompletionParams& params, matcomp::Aggregate how,
                        std::span<const std::string> worker_ids, std::span<const std::string> image_ids) {
  std::vector<std::string> workers(worker_ids.begin(), worker_ids.end());
  std::vector<std::string> images(image_ids.begin(), image_ids.end());
  if (workers.empty() || images.empty()) {
    std::unordered_set<std::string> seen_w, seen_i;
    const bool fill_w = workers.empty(), fill_i = images.empty();
    for (const auto& c : comparisons) {
      if (fill_w && seen_w.insert(c.rater_id).second) workers.push_back(c.rater_id);
      if (fill_i && seen_i.insert(c.left_id).second) images.push_back(c.left_id);
      if (fill_i && seen_i.insert(c.right_id).second) images.push_back(c.right_id);
    }
  }
  HqvResult out;
  out.completion = matcomp::complete_matrix(comparisons, workers, images, params);
  out.quality = matcomp::aggregate(matcomp::normalize_worker_rows(out.completion.matrix), how);
  return out;
}

std::vector<std::string> split_train_subjects(std::span<const std::string> subjects, double train_frac,
                                              std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train fraction must lie in (0, 1)");
  }
  if (subjects.size() < 2) {
    throw Error(ErrorCode::kTooFewSubjects, "a train/test split needs at least 2 subjects");
  }
  std::vector<std::string> order(subjects.begin(), subjects.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  const auto s = static_cast<double>(order.size());
  const auto n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(train_frac * s)), 1,
                                               order.size() - 1);
  order.resize(n_train);
  return order;
}

ProtocolSummary protocol_within(const FeatureCorpus& corpus, const QualityAssignment& targets,
                                const ProtocolOptions& options) {
  if (options.splits < 1) throw Error(ErrorCode::kInvalidArgument, "at least one split is required");
  targets_for(corpus, targets);
  const std::vector<std::string> subjects = corpus.subjects();

  ProtocolSummary summary;
  std::vector<double> rhos;
  for (std::size_t s = 0; s < options.splits; ++s) {
    SplitResult split;
    split.split = s;
    const std::uint64_t split_seed = mix_seed(options.seed, s);
    split.train_subjects = split_train_subjects(subjects, options.train_frac, split_seed);
    const std::unordered_set<std::string> train_set(split.train_subjects.begin(), split.train_subjects.end());
    for (const auto& subj : subjects) {
      if (!train_set.count(subj)) split.test_subjects.push_back(subj);
    }
    const FeatureCorpus train = corpus.subset_subjects(split.train_subjects);
    const FeatureCorpus test = corpus.subset_subjects(split.test_subjects);
    for (const auto& r : train.records()) split.train_ids.push_back(r.image_id);
    for (const auto& r : test.records()) split.test_ids.push_back(r.image_id);

    std::vector<std::string> train_row_subjects;
    for (const auto& r : train.records()) train_row_subjects.push_back(r.subject_id);
    const std::vector<double> y_train = targets_for(train, targets);
    const std::uint64_t inner_seed = mix_seed(split_seed, 0x5eed);
    split.inner_folds = svr::subject_disjoint_folds(train_row_subjects, options.folds, inner_seed);
    svr::GridSearchResult search = svr::grid_search(feature_matrix(train), y_train, train_row_subjects,
                                                    options.grid, options.folds, inner_seed,
                                                    options.grid_options);
    split.best = search.best;
    split.model = std::move(search.model);

    const std::vector<double> pred = svr::predict(split.model, feature_matrix(test));
    const std::vector<double> y_test = targets_for(test, targets);
    for (std::size_t i = 0; i < pred.size(); ++i) split.predictions.set(split.test_ids[i], pred[i]);
    try {
      split.rho_test = spearman(y_test, pred);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConstantInput && e.code() != ErrorCode::kLengthMismatch) throw;
      split.rho_test = 0.0;
    }
    rhos.push_back(split.rho_test);
    summary.splits.push_back(std::move(split));
  }
  summary.mean_rho = mean(rhos);
  summary.std_rho = rhos.size() > 1 ? sample_stddev(rhos) : 0.0;
  return summary;
}

CrossResult protocol_cross(const FeatureCorpus& train_corpus, const QualityAssignment& train_targets,
                           const FeatureCorpus& test_corpus, const ProtocolOptions& options,
                           bool failure_floor) {
  if (!test_corpus.empty() && test_corpus.dim() != train_corpus.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "training corpus has " + std::to_string(train_corpus.dim()) +
                                                   " features, test corpus has " +
                                                   std::to_string(test_corpus.dim()));
  }
  std::vector<FaceRecord> usable;
  for (const auto& r : train_corpus.records()) {
    if (r.detect_ok) usable.push_back(r);
  }
  const FeatureCorpus train(std::move(usable));
  std::vector<std::string> subjects;
  for (const auto& r : train.records()) subjects.push_back(r.subject_id);

  CrossResult out;
  out.search = svr::grid_search(feature_matrix(train), targets_for(train, train_targets), subjects,
                                options.grid, options.folds, options.seed, options.grid_options);
  QualityAssignment predicted;
  for (const auto& r : test_corpus.records()) {
    if (!r.detect_ok && failure_floor) continue;
    predicted.set(r.image_id, svr::predict(out.search.model, r.features));
  }
  out.predictions = failure_floor ? eval::apply_failure_floor(predicted, test_corpus) : predicted;
  if (failure_floor) {
    // Keep corpus order regardless of which records were floored.
    QualityAssignment ordered;
    for (const auto& r : test_corpus.records()) ordered.set(r.image_id, out.predictions.at(r.image_id));
    out.predictions = std::move(ordered);
  }
  return out;
}

std::string format_summary(const ProtocolSummary& summary) {
  std::string out = "split,rho_test,best_C,best_gamma,best_epsilon\n";
  for (const auto& s : summary.splits) {
    out += std::to_string(s.split) + ',' + csv::format(s.rho_test) + ',' + csv::format(s.best.C) + ',' +
           csv::format(s.best.gamma) + ',' + csv::format(s.best.epsilon) + '\n';
  }
  out += "mean,std\n";
  out += csv::format(summary.mean_rho) + ',' + csv::format(summary.std_rho) + '\n';
  return out;
}

void save_summary(const ProtocolSummary& summary, const std::filesystem::path& path) {
  csv::write_file(path, format_summary(summary));
}

}  // namespace faceq::pipeline
