#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faceq/corpus.hpp"
#include "faceq/eval.hpp"
#include "faceq/matcomp.hpp"
#include "faceq/pairwise.hpp"
#include "faceq/svr.hpp"

namespace faceq::pipeline {

svr::Matrix feature_matrix(const FeatureCorpus& corpus);

// Targets for every record, in corpus order. Throws MissingTarget.
std::vector<double> targets_for(const FeatureCorpus& corpus, const QualityAssignment& targets);

// complete -> normalise rows -> aggregate. Workers and images default to
// those named by the comparisons, in order of first appearance.
struct HqvResult {
  QualityAssignment quality;
  matcomp::CompletionResult completion;
};
HqvResult human_quality(std::span<const pairwise::Comparison> comparisons,
                        const matcomp::CompletionParams& params,
                        matcomp::Aggregate how = matcomp::Aggregate::kMedian,
                        std::span<const std::string> worker_ids = {},
                        std::span<const std::string> image_ids = {});

struct ProtocolOptions {
  std::size_t splits = 10;
  double train_frac = 2.0 / 3.0;
  std::size_t folds = 5;
  std::vector<svr::SvrParams> grid = svr::default_grid();
  std::uint64_t seed = 0;
  svr::GridOptions grid_options;
};

struct SplitResult {
  std::size_t split = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<std::size_t> inner_folds;  // per training row
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  svr::SvrParams best;
  svr::QualityModel model;
  QualityAssignment predictions;  // test records
  double rho_test = 0.0;
};

struct ProtocolSummary {
  std::vector<SplitResult> splits;
  double mean_rho = 0.0;
  double std_rho = 0.0;  // sample standard deviation; 0 for one split
};

// Train count per split is round(train_frac * subjects), kept within
// [1, subjects - 1].
std::vector<std::string> split_train_subjects(std::span<const std::string> subjects, double train_frac,
                                              std::uint64_t seed);

// Outer subject splits of the whole corpus; inner subject-disjoint grid
// search on each training side; Spearman of target vs prediction on the
// test side. Every record needs a target (MissingTarget otherwise).
ProtocolSummary protocol_within(const FeatureCorpus& corpus, const QualityAssignment& targets,
                                const ProtocolOptions& options);

struct CrossResult {
  svr::GridSearchResult search;
  QualityAssignment predictions;
};

// Grid search and retrain on the training corpus (detection failures are
// left out), predict every test record, then apply the failure floor.
CrossResult protocol_cross(const FeatureCorpus& train_corpus, const QualityAssignment& train_targets,
                           const FeatureCorpus& test_corpus, const ProtocolOptions& options,
                           bool failure_floor = true);

// Header `split,rho_test,best_C,best_gamma,best_epsilon`, then a `mean,std`
// footer line followed by its values.
std::string format_summary(const ProtocolSummary& summary);
void save_summary(const ProtocolSummary& summary, const std::filesystem::path& path);

struct SynthOptions {
  std::size_t n_subjects = 100;
  std::size_t images_per_subject = 5;
  std::size_t dim = 8;
  std::uint64_t seed = 0;

  double feature_noise = 0.05;
  double score_noise = 0.02;     // genuine scores
  double impostor_jitter = 0.0;  // per-probe noise on the shared impostor pool
  double genuine_base = 0.9;
  double genuine_drop = 0.6;
  double impostor_mean = 0.2;
  double impostor_sd = 0.1;

  std::size_t n_workers = 10;
  std::size_t comparisons_per_worker = 1000;
  double flip_prob = 0.0;
  double similar_band = 0.0;
};

// Latent quality q ~ U(0, 1) per image. The first half of the feature
// dimensions carry q (random loadings plus noise), the rest carry a subject
// embedding. The highest-q image of each subject goes to the gallery, the
// rest are probes. A probe's genuine score is base - drop * (1 - q) + noise;
// its impostor scores are a fixed pool, permuted per probe, so every probe
// sees the same impostor mean and spread. Comparisons follow the sign of
// q_left - q_right, SIMILAR inside the band, flipped with flip_prob.
struct SynthCorpus {
  FeatureCorpus corpus;
  QualityAssignment latent;
  ScoreSet scores;
  pairwise::ComparisonSet comparisons;
  std::vector<std::string> gallery_ids;
  std::vector<std::string> probe_ids;
  std::vector<std::string> worker_ids;
};

SynthCorpus synth_corpus(const SynthOptions& options);

struct TemplateSynthOptions {
  std::size_t n_subjects = 60;
  std::size_t min_members = 3;
  std::size_t max_members = 8;
  std::size_t impostors_per_template = 5;
  std::uint64_t seed = 0;
  double genuine_base = 0.9;
  double genuine_drop = 0.6;
  double genuine_noise = 0.0;
  double impostor_mean = 0.2;
  double impostor_sd = 0.1;
};

// Two templates per subject (gallery "g", probe "p"). A genuine member pair
// scores base - drop * ((1 - q_a) + (1 - q_b)) / 2 + noise; impostor pairs
// are quality independent.
struct SynthTemplates {
  FeatureCorpus corpus;  // one-dimensional features holding q
  std::vector<Template> templates;
  std::vector<eval::TemplateComparison> comparisons;
  ScoreSet pair_scores;
  QualityAssignment latent;
};

SynthTemplates synth_templates(const TemplateSynthOptions& options);

// Writes features.csv, latent.csv, scores.csv, comparisons.csv, gallery.csv,
// probes.csv into `dir`.
void save_synth(const SynthCorpus& synth, const std::filesystem::path& dir);

}  // namespace faceq::pipeline
