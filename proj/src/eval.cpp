#include "faceq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/stats.hpp"

namespace faceq::eval {

namespace {

void require_scores(std::span<const double> s, const char* what) {
  if (s.empty()) throw Error(ErrorCode::kEmptyScores, std::string("no ") + what + " scores");
}

}  // namespace

double threshold_at_fmr(std::span<const double> impostor_scores, double target_fmr) {
  require_scores(impostor_scores, "impostor");
  if (!(target_fmr > 0.0 && target_fmr <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target FMR must lie in (0, 1]");
  }
  std::vector<double> s(impostor_scores.begin(), impostor_scores.end());
  std::sort(s.begin(), s.end());
  const auto n = static_cast<double>(s.size());
  // Candidates ascending; count(>= s[i]) = n - i for the first index of each value.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0 && s[i] == s[i - 1]) continue;
    if (static_cast<double>(s.size() - i) / n <= target_fmr) return s[i];
  }
  return kNoMatchThreshold;
}

double fnmr(std::span<const double> genuine_scores, double t) {
  require_scores(genuine_scores, "genuine");
  const auto below = std::count_if(genuine_scores.begin(), genuine_scores.end(), [t](double g) { return g < t; });
  return static_cast<double>(below) / static_cast<double>(genuine_scores.size());
}

double fmr(std::span<const double> impostor_scores, double t) {
  require_scores(impostor_scores, "impostor");
  const auto above = std::count_if(impostor_scores.begin(), impostor_scores.end(), [t](double s) { return s >= t; });
  return static_cast<double>(above) / static_cast<double>(impostor_scores.size());
}

double threshold_at_fnmr(std::span<const double> genuine_scores, double target) {
  require_scores(genuine_scores, "genuine");
  std::vector<double> s(genuine_scores.begin(), genuine_scores.end());
  std::sort(s.begin(), s.end());
  const auto n = static_cast<double>(s.size());
  double best_t = s.front();
  double best_gap = std::abs(0.0 - target);
  for (std::size_t i = 1; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == s[i - 1]) continue;
    const double t = i < s.size() ? s[i] : kNoMatchThreshold;
    const double gap = std::abs(static_cast<double>(i) / n - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_t = t;
    }
  }
  return best_t;
}

std::string_view to_string(ErrorKind k) { return k == ErrorKind::kFnmr ? "FNMR" : "FMR"; }

std::vector<double> default_reject_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::vector<std::string> rejection_order(std::span<const std::string> probe_ids,
                                         const QualityAssignment& quality) {
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(probe_ids.size());
  for (const auto& id : probe_ids) keyed.emplace_back(quality.at(id), id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> order;
  order.reserve(keyed.size());
  for (auto& k : keyed) order.push_back(std::move(k.second));
  return order;
}

std::vector<std::string> probe_ids(const ScoreSet& scores) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& e : scores.entries()) {
    if (seen.insert(e.probe_id).second) out.push_back(e.probe_id);
  }
  return out;
}

EvrCurve evr_curve_for_order(const ScoreSet& scores, const FeatureCorpus& corpus,
                             std::span<const std::string> order, ErrorKind kind, double threshold,
                             std::span<const double> fractions) {
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank.emplace(order[i], i);

  // Per probe: number of counted pairs and number of errors among them.
  std::vector<std::size_t> total(order.size(), 0), errors(order.size(), 0);
  for (const auto& e : scores.entries()) {
    const auto it = rank.find(e.probe_id);
    if (it == rank.end()) {
      throw Error(ErrorCode::kMissingQuality, "probe '" + e.probe_id + "' missing from rejection order");
    }
    const bool genuine = is_genuine(e, corpus);
    if (genuine != (kind == ErrorKind::kFnmr)) continue;
    ++total[it->second];
    if (genuine ? e.score < threshold : e.score >= threshold) ++errors[it->second];
  }
  std::size_t all_total = 0;
  for (auto t : total) all_total += t;
  if (all_total == 0) {
    throw Error(ErrorCode::kEmptyScores,
                std::string("no ") + (kind == ErrorKind::kFnmr ? "genuine" : "impostor") + " scores");
  }

  EvrCurve curve;
  curve.error_kind = kind;
  curve.fixed_threshold = threshold;
  // Suffix sums: survivors after dropping the first r probes.
  std::vector<std::size_t> tot_suffix(order.size() + 1, 0), err_suffix(order.size() + 1, 0);
  for (std::size_t i = order.size(); i-- > 0;) {
    tot_suffix[i] = tot_suffix[i + 1] + total[i];
    err_suffix[i] = err_suffix[i + 1] + errors[i];
  }
  double prev = -1.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0) || f <= prev) {
      throw Error(ErrorCode::kInvalidArgument, "reject fractions must be increasing within [0, 1]");
    }
    prev = f;
    const auto drop = static_cast<std::size_t>(std::floor(f * static_cast<double>(order.size()) + 1e-9));
    const std::size_t r = std::min(drop, order.size());
    curve.reject_fractions.push_back(f);
    curve.error_values.push_back(
        tot_suffix[r] == 0 ? 0.0 : static_cast<double>(err_suffix[r]) / static_cast<double>(tot_suffix[r]));
  }
  return curve;
}

std::pair<std::vector<double>, std::vector<double>> split_scores(const ScoreSet& scores,
                                                                 const FeatureCorpus& corpus) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& e : scores.entries()) {
    (is_genuine(e, corpus) ? out.first : out.second).push_back(e.score);
  }
  return out;
}

EvrCurve evr_curve(const ScoreSet& scores, const FeatureCorpus& corpus,
                   const QualityAssignment& quality, ErrorKind kind, double initial_error,
                   std::span<const double> fractions) {
  const std::vector<std::string> probes = probe_ids(scores);
  const std::vector<std::string> order = rejection_order(probes, quality);
  const auto [genuine, impostor] = split_scores(scores, corpus);
  const double t = kind == ErrorKind::kFnmr ? threshold_at_fnmr(genuine, initial_error)
                                            : threshold_at_fmr(impostor, initial_error);
  return evr_curve_for_order(scores, corpus, order, kind, t, fractions);
}

double area_under(const EvrCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.reject_fractions.size(); ++i) {
    area += 0.5 * (curve.error_values[i] + curve.error_values[i - 1]) *
            (curve.reject_fractions[i] - curve.reject_fractions[i - 1]);
  }
  return area;
}

GateResult gate_template(const Template& tmpl, const QualityAssignment& quality, double threshold) {
  GateResult result;
  result.template_id = tmpl.template_id;
  const std::string* best = nullptr;
  double best_q = 0.0;
  for (const auto& id : tmpl.member_ids) {
    const double q = quality.at(id);
    if (q >= threshold) result.selected_ids.push_back(id);
    if (best == nullptr || q > best_q || (q == best_q && id < *best)) {
      best = &id;
      best_q = q;
    }
  }
  if (result.selected_ids.empty() && best != nullptr) {
    result.selected_ids.push_back(*best);
    result.fallback_used = true;
  }
  return result;
}

FusionRule parse_fusion_rule(std::string_view name) {
  if (name == "mean" || name == "MEAN") return FusionRule::kMean;
  if (name == "max" || name == "MAX") return FusionRule::kMax;
  throw Error(ErrorCode::kInvalidArgument, "unknown fusion rule '" + std::string(name) + "'");
}

double fuse(std::span<const double> scores, FusionRule rule) {
  require_scores(scores, "fusion input");
  if (rule == FusionRule::kMax) return *std::max_element(scores.begin(), scores.end());
  return mean(scores);
}

double pair_score(const ScoreSet& scores, const std::string& a, const std::string& b) {
  if (auto s = scores.find(a, b)) return *s;
  if (auto s = scores.find(b, a)) return *s;
  throw Error(ErrorCode::kMissingPairScore, "no score for pair ('" + a + "', '" + b + "')");
}

double template_verify(const Template& gallery, const Template& probe, const ScoreSet& pair_scores,
                       const QualityAssignment& quality, double threshold, FusionRule rule) {
  const GateResult g = gate_template(gallery, quality, threshold);
  const GateResult p = gate_template(probe, quality, threshold);
  std::vector<double> s;
  s.reserve(g.selected_ids.size() * p.selected_ids.size());
  for (const auto& pid : p.selected_ids) {
    for (const auto& gid : g.selected_ids) s.push_back(pair_score(pair_scores, pid, gid));
  }
  return fuse(s, rule);
}

std::vector<double> member_qualities(std::span<const Template> templates, const QualityAssignment& quality) {
  std::vector<double> out;
  for (const auto& t : templates) {
    for (const auto& id : t.member_ids) out.push_back(quality.at(id));
  }
  return out;
}

SweepResult quality_sweep(std::span<const Template> templates,
                          std::span<const TemplateComparison> comparisons,
                          const ScoreSet& pair_scores, const QualityAssignment& quality,
                          std::span<const double> percentiles, double target_fmr,
                          std::span<const double> reference_quality, FusionRule rule,
                          std::string reference_label) {
  if (reference_quality.empty()) throw Error(ErrorCode::kMissingQuality, "empty quality reference set");
  std::unordered_map<std::string, const Template*> by_id;
  for (const auto& t : templates) by_id.emplace(t.template_id, &t);
  auto lookup = [&](const std::string& id) -> const Template& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::kUnknownReference, "unknown template '" + id + "'");
    return *it->second;
  };
  std::vector<std::pair<const Template*, const Template*>> pairs;
  std::vector<bool> genuine;
  for (const auto& c : comparisons) {
    const Template& g = lookup(c.gallery_template_id);
    const Template& p = lookup(c.probe_template_id);
    pairs.emplace_back(&g, &p);
    genuine.push_back(g.subject_id == p.subject_id);
  }

  auto fused_at = [&](double q_threshold, std::vector<double>* gen, std::vector<double>* imp) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double s = template_verify(*pairs[i].first, *pairs[i].second, pair_scores, quality, q_threshold, rule);
      (genuine[i] ? gen : imp)->push_back(s);
    }
  };

  SweepResult result;
  result.target_fmr = target_fmr;
  result.reference = std::move(reference_label);
  {
    std::vector<double> gen, imp;
    fused_at(percentile(reference_quality, 0.0), &gen, &imp);
    result.score_threshold = threshold_at_fmr(imp, target_fmr);
  }
  for (double n : percentiles) {
    if (!(n >= 0.0 && n <= 100.0)) throw Error(ErrorCode::kInvalidArgument, "percentile outside [0, 100]");
    SweepPoint pt;
    pt.percentile = n;
    pt.quality_threshold = percentile(reference_quality, n);
    std::vector<double> gen, imp;
    fused_at(pt.quality_threshold, &gen, &imp);
    pt.fnmr = fnmr(gen, result.score_threshold);
    pt.genuine_count = gen.size();
    pt.impostor_count = imp.size();
    pt.mean_genuine = mean(gen);
    result.points.push_back(pt);
  }
  return result;
}

QualityAssignment apply_failure_floor(const QualityAssignment& quality, const FeatureCorpus& corpus) {
  double lowest = 0.0;
  for (std::size_t i = 0; i < quality.entries().size(); ++i) {
    const double q = quality.entries()[i].second;
    lowest = i == 0 ? q : std::min(lowest, q);
  }
  const double floor = lowest - 1.0;
  QualityAssignment out = quality;
  for (const auto& r : corpus.records()) {
    if (!r.detect_ok) out.set(r.image_id, floor);
  }
  return out;
}

std::vector<RocPoint> roc(std::span<const double> genuine, std::span<const double> impostor,
                          std::span<const double> far_grid) {
  require_scores(genuine, "genuine");
  require_scores(impostor, "impostor");
  std::vector<RocPoint> out;
  for (double far : far_grid) {
    const double t = threshold_at_fmr(impostor, far);
    out.push_back({far, t, 1.0 - fnmr(genuine, t)});
  }
  return out;
}

std::string format_curve(std::string_view kind, double threshold, double target_fmr,
                         std::span<const double> x, std::span<const double> y,
                         std::span<const std::string> extra_preamble) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "curve x and y differ in length");
  std::string out = "# kind=" + std::string(kind) + " threshold=" + csv::format(threshold) +
                    " fmr=" + csv::format(target_fmr) + "\n";
  for (const auto& line : extra_preamble) out += "# " + line + "\n";
  out += "x,y\n";
  for (std::size_t i = 0; i < x.size(); ++i) out += csv::format(x[i]) + ',' + csv::format(y[i]) + '\n';
  return out;
}

void save_curve(const std::filesystem::path& path, std::string_view kind, double threshold,
                double target_fmr, std::span<const double> x, std::span<const double> y,
                std::span<const std::string> extra_preamble) {
  csv::write_file(path, format_curve(kind, threshold, target_fmr, x, y, extra_preamble));
}

std::vector<TemplateComparison> load_template_comparisons(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"gallery_template_id", "probe_template_id"});
  std::vector<TemplateComparison> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != 2) {
      throw Error(ErrorCode::kMalformedRow, table.source + " row " + std::to_string(i + 1) + ": expected 2 fields");
    }
    out.push_back({table.rows[i][0], table.rows[i][1]});
  }
  return out;
}

void save_template_comparisons(std::span<const TemplateComparison> comparisons,
                               const std::filesystem::path& path) {
  std::string out = "gallery_template_id,probe_template_id\n";
  for (const auto& c : comparisons) out += c.gallery_template_id + ',' + c.probe_template_id + '\n';
  csv::write_file(path, out);
}

}  // namespace faceq::eval
