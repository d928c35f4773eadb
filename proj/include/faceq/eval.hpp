#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faceq/corpus.hpp"

namespace faceq::eval {

inline constexpr double kNoMatchThreshold = std::numeric_limits<double>::infinity();

// Smallest threshold t, taken from the scores or +inf, with
// fraction(impostor >= t) <= target_fmr. Throws EmptyScores.
double threshold_at_fmr(std::span<const double> impostor_scores, double target_fmr);

// fraction(genuine < t) and fraction(impostor >= t). Throw EmptyScores.
double fnmr(std::span<const double> genuine_scores, double t);
double fmr(std::span<const double> impostor_scores, double t);

// Threshold whose FNMR is closest to `target`, smaller t on ties.
double threshold_at_fnmr(std::span<const double> genuine_scores, double target);

enum class ErrorKind { kFnmr, kFmr };
std::string_view to_string(ErrorKind k);

struct EvrCurve {
  std::vector<double> reject_fractions;
  std::vector<double> error_values;
  ErrorKind error_kind = ErrorKind::kFnmr;
  double fixed_threshold = 0.0;
};

// 0, 0.01, ..., 0.5
std::vector<double> default_reject_grid();

// Probe ids ordered for rejection: lowest quality first, ties by id.
// Throws MissingQuality for any probe without a value.
std::vector<std::string> rejection_order(std::span<const std::string> probe_ids,
                                         const QualityAssignment& quality);

// Distinct probe ids of the score set in order of first appearance.
std::vector<std::string> probe_ids(const ScoreSet& scores);

// Error at a fixed threshold as the first floor(f * P) probes of
// `order` are removed. `order` must list every scored probe once.
EvrCurve evr_curve_for_order(const ScoreSet& scores, const FeatureCorpus& corpus,
                             std::span<const std::string> order, ErrorKind kind, double threshold,
                             std::span<const double> fractions);

// Fixes the threshold on the full set so the error matches `initial_error`
// (FNMR: closest achievable value; FMR: threshold_at_fmr), then rejects
// probes in quality order. Throws MissingQuality, EmptyScores.
EvrCurve evr_curve(const ScoreSet& scores, const FeatureCorpus& corpus,
                   const QualityAssignment& quality, ErrorKind kind, double initial_error,
                   std::span<const double> fractions);
inline EvrCurve evr_curve(const ScoreSet& scores, const FeatureCorpus& corpus,
                          const QualityAssignment& quality, ErrorKind kind, double initial_error) {
  const auto grid = default_reject_grid();
  return evr_curve(scores, corpus, quality, kind, initial_error, grid);
}

// Trapezoidal area under error vs reject fraction.
double area_under(const EvrCurve& curve);

struct GateResult {
  std::string template_id;
  std::vector<std::string> selected_ids;  // member order
  bool fallback_used = false;
};

// Members with quality >= threshold, or the single best member if none
// qualify (ties by id). Throws MissingQuality.
GateResult gate_template(const Template& tmpl, const QualityAssignment& quality, double threshold);

enum class FusionRule { kMean, kMax };
FusionRule parse_fusion_rule(std::string_view name);

// Throws EmptyScores.
double fuse(std::span<const double> scores, FusionRule rule);

// Score for an image pair looked up in either orientation. Throws
// MissingPairScore.
double pair_score(const ScoreSet& scores, const std::string& a, const std::string& b);

// Gates both templates, then fuses the selected x selected pair scores.
double template_verify(const Template& gallery, const Template& probe, const ScoreSet& pair_scores,
                       const QualityAssignment& quality, double threshold, FusionRule rule);

struct TemplateComparison {
  std::string gallery_template_id;
  std::string probe_template_id;
};

struct SweepPoint {
  double percentile = 0.0;
  double quality_threshold = 0.0;
  double fnmr = 0.0;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
  double mean_genuine = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double score_threshold = 0.0;  // fixed from the n = 0 fused impostors
  double target_fmr = 0.0;
  std::string reference;  // which quality distribution set the thresholds
};

// For each percentile n the quality threshold is the nth percentile of
// `reference_quality`; every comparison is re-fused with that gate and FNMR
// is taken at the score threshold fixed by target_fmr on the n = 0 fusion.
// Comparisons are genuine iff the two templates share a subject.
SweepResult quality_sweep(std::span<const Template> templates,
                          std::span<const TemplateComparison> comparisons,
                          const ScoreSet& pair_scores, const QualityAssignment& quality,
                          std::span<const double> percentiles, double target_fmr,
                          std::span<const double> reference_quality, FusionRule rule = FusionRule::kMean,
                          std::string reference_label = "evaluation-split");

// Quality values of every member of the templates, template order.
std::vector<double> member_qualities(std::span<const Template> templates, const QualityAssignment& quality);

// Records with detect_ok == false get (min quality) - 1; -1 if the
// assignment is empty. Missing records are appended.
QualityAssignment apply_failure_floor(const QualityAssignment& quality, const FeatureCorpus& corpus);

struct RocPoint {
  double far = 0.0;
  double threshold = 0.0;
  double tar = 0.0;
};

std::vector<RocPoint> roc(std::span<const double> genuine, std::span<const double> impostor,
                          std::span<const double> far_grid);

// Genuine and impostor score lists of a score set.
std::pair<std::vector<double>, std::vector<double>> split_scores(const ScoreSet& scores,
                                                                 const FeatureCorpus& corpus);

// Curve file: `# kind=<K> threshold=<t> fmr=<target>`, optional extra
// comment lines, header `x,y`.
std::string format_curve(std::string_view kind, double threshold, double target_fmr,
                         std::span<const double> x, std::span<const double> y,
                         std::span<const std::string> extra_preamble = {});
void save_curve(const std::filesystem::path& path, std::string_view kind, double threshold,
                double target_fmr, std::span<const double> x, std::span<const double> y,
                std::span<const std::string> extra_preamble = {});

std::vector<TemplateComparison> load_template_comparisons(const std::filesystem::path& path);
void save_template_comparisons(std::span<const TemplateComparison> comparisons,
                               const std::filesystem::path& path);

}  // namespace faceq::eval
