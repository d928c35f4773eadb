#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faceq/corpus.hpp"
#include "faceq/error.hpp"

namespace faceq::mqv {

// One probe's genuine score against its subject's gallery image, plus its
// scores against every other gallery subject.
struct ProbeScoreProfile {
  std::string probe_id;
  double genuine_score = 0.0;
  std::vector<double> impostor_scores;
  double impostor_mean = 0.0;
  double impostor_sd = 0.0;  // divide-by-N

  // Fills mean and sd from `impostors`. Throws TooFewImpostors for < 2.
  static ProbeScoreProfile make(std::string probe_id, double genuine, std::vector<double> impostors);
};

inline constexpr double kMinImpostorSpread = 1e-12;

// (genuine - impostor_mean) / impostor_sd. Throws DegenerateImpostorSpread
// when the spread is below kMinImpostorSpread.
double z_score(const ProbeScoreProfile& profile);

struct ProbeFailure {
  std::string probe_id;
  ErrorCode kind;
};

struct MqvResult {
  QualityAssignment quality;  // probes in the order given
  std::vector<ProbeFailure> failures;
};

std::string_view failure_name(ErrorCode kind);

// Matcher quality for every probe. Scores against images outside the gallery
// are ignored. Probes that cannot be normalised are reported and omitted.
// Throws InvalidArgument if the partition has violations.
MqvResult compute_mqv(const ScoreSet& scores, const FeatureCorpus& corpus,
                      std::span<const std::string> gallery_ids,
                      std::span<const std::string> probe_ids);

// Header `probe_id,error_kind`.
void save_failures(std::span<const ProbeFailure> failures, const std::filesystem::path& path);

}  // namespace faceq::mqv
