#include "faceq/mqv.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "faceq/csv.hpp"
#include "faceq/stats.hpp"

namespace faceq::mqv {

ProbeScoreProfile ProbeScoreProfile::make(std::string probe_id, double genuine,
                                          std::vector<double> impostors) {
  if (impostors.size() < 2) {
    throw Error(ErrorCode::kTooFewImpostors,
                "probe '" + probe_id + "' has " + std::to_string(impostors.size()) + " impostor scores");
  }
  ProbeScoreProfile p;
  p.probe_id = std::move(probe_id);
  p.genuine_score = genuine;
  p.impostor_mean = mean(impostors);
  p.impostor_sd = population_stddev(impostors);
  p.impostor_scores = std::move(impostors);
  return p;
}

double z_score(const ProbeScoreProfile& profile) {
  if (!(profile.impostor_sd >= kMinImpostorSpread)) {
    throw Error(ErrorCode::kDegenerateImpostorSpread,
                "probe '" + profile.probe_id + "' has no impostor score spread");
  }
  return (profile.genuine_score - profile.impostor_mean) / profile.impostor_sd;
}

std::string_view failure_name(ErrorCode kind) {
  switch (kind) {
    case ErrorCode::kMissingGenuineScore: return "MissingGenuineScore";
    case ErrorCode::kTooFewImpostors: return "TooFewImpostors";
    case ErrorCode::kDegenerateImpostorSpread: return "DegenerateImpostorSpread";
    default: return error_code_name(kind);
  }
}

MqvResult compute_mqv(const ScoreSet& scores, const FeatureCorpus& corpus,
                      std::span<const std::string> gallery_ids,
                      std::span<const std::string> probe_ids) {
  const PartitionReport report = validate_partition(corpus, gallery_ids, probe_ids);
  if (!report.ok()) {
    std::string msg = "invalid gallery/probe partition:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw Error(ErrorCode::kInvalidArgument, msg);
  }
  const std::unordered_set<std::string> gallery(gallery_ids.begin(), gallery_ids.end());

  struct Collected {
    std::vector<double> genuine;
    std::vector<double> impostors;
  };
  std::unordered_map<std::string, Collected> by_probe;
  for (const auto& id : probe_ids) by_probe[id];
  for (const auto& e : scores.entries()) {
    auto it = by_probe.find(e.probe_id);
    if (it == by_probe.end() || !gallery.count(e.gallery_id)) continue;
    if (is_genuine(e, corpus)) {
      it->second.genuine.push_back(e.score);
    } else {
      it->second.impostors.push_back(e.score);
    }
  }

  MqvResult result;
  for (const auto& id : probe_ids) {
    Collected& c = by_probe[id];
    if (c.genuine.empty()) {
      result.failures.push_back({id, ErrorCode::kMissingGenuineScore});
      continue;
    }
    try {
      const auto profile = ProbeScoreProfile::make(id, c.genuine.front(), std::move(c.impostors));
      result.quality.set(id, z_score(profile));
    } catch (const Error& e) {
      result.failures.push_back({id, e.code()});
    }
  }
  return result;
}

void save_failures(std::span<const ProbeFailure> failures, const std::filesystem::path& path) {
  std::string out = "probe_id,error_kind\n";
  for (const auto& f : failures) out += f.probe_id + ',' + std::string(failure_name(f.kind)) + '\n';
  csv::write_file(path, out);
}

}  // namespace faceq::mqv
