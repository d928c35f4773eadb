#include "faceq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"

namespace faceq {

namespace {

std::string pair_key(std::string_view probe, std::string_view gallery) {
  std::string key;
  key.reserve(probe.size() + gallery.size() + 1);
  key.append(probe).push_back('\n');
  key.append(gallery);
  return key;
}

std::string row_context(const csv::Table& table, std::size_t row) {
  return table.source + " row " + std::to_string(row + 1);
}

}  // namespace

FeatureCorpus::FeatureCorpus(std::vector<FaceRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const FaceRecord& r = records_[i];
    if (r.features.empty()) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + r.image_id + "' has no features");
    }
    if (i == 0) {
      dim_ = r.features.size();
    } else if (r.features.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record " + std::to_string(i + 1) + " ('" + r.image_id + "') has " +
                      std::to_string(r.features.size()) + " features, expected " +
                      std::to_string(dim_));
    }
    if (r.detect_ok &&
        !std::all_of(r.features.begin(), r.features.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "record '" + r.image_id + "' has non-finite features but detect_ok is set");
    }
    if (!index_.emplace(r.image_id, i).second) {
      throw Error(ErrorCode::kDuplicateImageId, "duplicate image_id '" + r.image_id + "'");
    }
    ++subject_counts_[r.subject_id];
  }
}

const FaceRecord* FeatureCorpus::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const FaceRecord& FeatureCorpus::at(std::string_view image_id) const {
  const FaceRecord* r = find(image_id);
  if (r == nullptr) {
    throw Error(ErrorCode::kUnknownImageId, "unknown image_id '" + std::string(image_id) + "'");
  }
  return *r;
}

std::optional<std::size_t> FeatureCorpus::index_of(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> FeatureCorpus::subjects() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.subject_id).second) out.push_back(r.subject_id);
  }
  return out;
}

std::size_t FeatureCorpus::subject_image_count(std::string_view subject_id) const {
  const auto it = subject_counts_.find(std::string(subject_id));
  return it == subject_counts_.end() ? 0 : it->second;
}

FeatureCorpus FeatureCorpus::subset(std::span<const std::string> image_ids) const {
  const std::unordered_set<std::string> wanted(image_ids.begin(), image_ids.end());
  std::vector<FaceRecord> out;
  for (const auto& r : records_) {
    if (wanted.count(r.image_id)) out.push_back(r);
  }
  return FeatureCorpus(std::move(out));
}

FeatureCorpus FeatureCorpus::subset_subjects(std::span<const std::string> subject_ids) const {
  const std::unordered_set<std::string> wanted(subject_ids.begin(), subject_ids.end());
  std::vector<FaceRecord> out;
  for (const auto& r : records_) {
    if (wanted.count(r.subject_id)) out.push_back(r);
  }
  return FeatureCorpus(std::move(out));
}

ScoreSet::ScoreSet(std::vector<ScoreEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!index_.emplace(pair_key(e.probe_id, e.gallery_id), i).second) {
      throw Error(ErrorCode::kDuplicatePair,
                  "duplicate score pair (" + e.probe_id + ", " + e.gallery_id + ")");
    }
  }
}

std::optional<double> ScoreSet::find(std::string_view probe_id, std::string_view gallery_id) const {
  const auto it = index_.find(pair_key(probe_id, gallery_id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].score;
}

bool is_genuine(const ScoreEntry& entry, const FeatureCorpus& corpus) {
  return corpus.at(entry.probe_id).subject_id == corpus.at(entry.gallery_id).subject_id;
}

void QualityAssignment::set(const std::string& image_id, double quality) {
  if (!std::isfinite(quality)) {
    throw Error(ErrorCode::kNonFiniteInput, "non-finite quality for '" + image_id + "'");
  }
  const auto [it, inserted] = index_.emplace(image_id, entries_.size());
  if (inserted) {
    entries_.emplace_back(image_id, quality);
  } else {
    entries_[it->second].second = quality;
  }
}

std::optional<double> QualityAssignment::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

double QualityAssignment::at(std::string_view image_id) const {
  const auto q = find(image_id);
  if (!q) {
    throw Error(ErrorCode::kMissingQuality, "no quality value for '" + std::string(image_id) + "'");
  }
  return *q;
}

PartitionReport validate_partition(const FeatureCorpus& corpus,
                                   std::span<const std::string> gallery_ids,
                                   std::span<const std::string> probe_ids) {
  PartitionReport report;
  const std::unordered_set<std::string> gallery(gallery_ids.begin(), gallery_ids.end());

  std::set<std::string> gallery_subjects;
  std::map<std::string, std::size_t> per_subject;
  for (const auto& id : gallery_ids) {
    const FaceRecord* r = corpus.find(id);
    if (r == nullptr) {
      report.violations.push_back("unknown gallery image " + id);
      continue;
    }
    gallery_subjects.insert(r->subject_id);
    ++per_subject[r->subject_id];
  }
  for (const auto& [subject, count] : per_subject) {
    if (count > 1 && corpus.subject_image_count(subject) > 1) {
      report.violations.push_back("multiple gallery images for subject " + subject);
    }
  }
  for (const auto& id : probe_ids) {
    const FaceRecord* r = corpus.find(id);
    if (r == nullptr) {
      report.violations.push_back("unknown probe image " + id);
      continue;
    }
    if (gallery.count(id)) report.violations.push_back("image " + id + " is both gallery and probe");
    if (!gallery_subjects.count(r->subject_id)) {
      report.violations.push_back("probe " + id + " has no gallery image for subject " + r->subject_id);
    }
  }
  return report;
}

FeatureCorpus load_features(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const auto& h = table.header;
  if (h.size() < 2 || h[0] != "image_id" || h[1] != "subject_id") {
    throw Error(ErrorCode::kMalformedRow,
                table.source + ": header must start with image_id,subject_id");
  }
  std::size_t col = 2;
  const bool has_detect = h.size() > col && h[col] == "detect_ok";
  if (has_detect) ++col;
  const bool has_media = h.size() > col && h[col] == "media_kind";
  if (has_media) ++col;
  const std::size_t fixed = col;
  for (std::size_t k = fixed; k < h.size(); ++k) {
    if (h[k] != "f" + std::to_string(k - fixed)) {
      throw Error(ErrorCode::kMalformedRow,
                  table.source + ": unexpected feature column '" + h[k] + "'");
    }
  }
  const std::size_t header_dim = h.size() - fixed;

  std::vector<FaceRecord> records;
  records.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = row_context(table, i);
    if (row.size() <= fixed) {
      throw Error(ErrorCode::kMalformedRow, ctx + ": wrong field count " + std::to_string(row.size()));
    }
    if (row.size() != h.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  ctx + ": has " + std::to_string(row.size() - fixed) + " features, expected " +
                      std::to_string(header_dim));
    }
    FaceRecord r;
    r.image_id = row[0];
    r.subject_id = row[1];
    if (r.image_id.empty() || r.subject_id.empty()) {
      throw Error(ErrorCode::kMalformedRow, ctx + ": empty identifier");
    }
    if (!seen.insert(r.image_id).second) {
      throw Error(ErrorCode::kDuplicateImageId, ctx + ": duplicate image_id '" + r.image_id + "'");
    }
    if (has_detect) r.detect_ok = csv::parse_bool(row[2], ctx);
    if (has_media) {
      const auto& m = row[has_detect ? 3 : 2];
      if (m == "STILL") {
        r.media_kind = MediaKind::kStill;
      } else if (m == "FRAME") {
        r.media_kind = MediaKind::kFrame;
      } else {
        throw Error(ErrorCode::kMalformedRow, ctx + ": media_kind must be STILL or FRAME");
      }
    }
    r.features.reserve(header_dim);
    for (std::size_t k = fixed; k < row.size(); ++k) {
      r.features.push_back(csv::parse_double(row[k], ctx));
    }
    records.push_back(std::move(r));
  }
  return FeatureCorpus(std::move(records));
}

std::string format_features(const FeatureCorpus& corpus) {
  const bool any_frame = std::any_of(corpus.records().begin(), corpus.records().end(),
                                     [](const FaceRecord& r) { return r.media_kind == MediaKind::kFrame; });
  std::string out = "image_id,subject_id,detect_ok";
  if (any_frame) out += ",media_kind";
  for (std::size_t k = 0; k < corpus.dim(); ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& r : corpus.records()) {
    csv::check_token(r.image_id, "image_id");
    csv::check_token(r.subject_id, "subject_id");
    out += r.image_id + ',' + r.subject_id + ',' + (r.detect_ok ? "1" : "0");
    if (any_frame) out += r.media_kind == MediaKind::kFrame ? ",FRAME" : ",STILL";
    for (double v : r.features) out += ',' + csv::format(v);
    out += '\n';
  }
  return out;
}

void save_features(const FeatureCorpus& corpus, const std::filesystem::path& path) {
  csv::write_file(path, format_features(corpus));
}

ScoreSet load_scores_unchecked(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"probe_id", "gallery_id", "score"});
  std::vector<ScoreEntry> entries;
  entries.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = row_context(table, i);
    if (row.size() != 3) throw Error(ErrorCode::kMalformedRow, ctx + ": expected 3 fields");
    const double score = csv::parse_double(row[2], ctx);
    if (!std::isfinite(score)) throw Error(ErrorCode::kMalformedRow, ctx + ": non-finite score");
    entries.push_back({row[0], row[1], score});
  }
  return ScoreSet(std::move(entries));
}

ScoreSet load_scores(const std::filesystem::path& path, const FeatureCorpus& corpus) {
  ScoreSet scores = load_scores_unchecked(path);
  for (const auto& e : scores.entries()) {
    for (const auto* id : {&e.probe_id, &e.gallery_id}) {
      if (corpus.find(*id) == nullptr) {
        throw Error(ErrorCode::kUnknownImageId, path.string() + ": unknown image_id '" + *id + "'");
      }
    }
  }
  return scores;
}

void save_scores(const ScoreSet& scores, const std::filesystem::path& path) {
  std::string out = "probe_id,gallery_id,score\n";
  for (const auto& e : scores.entries()) {
    out += e.probe_id + ',' + e.gallery_id + ',' + csv::format(e.score) + '\n';
  }
  csv::write_file(path, out);
}

QualityAssignment load_quality(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"image_id", "quality"});
  QualityAssignment out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = row_context(table, i);
    if (row.size() != 2) throw Error(ErrorCode::kMalformedRow, ctx + ": expected 2 fields");
    if (out.contains(row[0])) {
      throw Error(ErrorCode::kDuplicateImageId, ctx + ": duplicate image_id '" + row[0] + "'");
    }
    const double q = csv::parse_double(row[1], ctx);
    if (!std::isfinite(q)) throw Error(ErrorCode::kMalformedRow, ctx + ": non-finite quality");
    out.set(row[0], q);
  }
  return out;
}

std::string format_quality(const QualityAssignment& quality) {
  std::string out = "image_id,quality\n";
  for (const auto& [id, q] : quality.entries()) out += id + ',' + csv::format(q) + '\n';
  return out;
}

void save_quality(const QualityAssignment& quality, const std::filesystem::path& path) {
  csv::write_file(path, format_quality(quality));
}

std::vector<Template> load_templates(const std::filesystem::path& path, const FeatureCorpus* corpus) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"template_id", "subject_id", "image_id"});
  std::vector<Template> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = row_context(table, i);
    if (row.size() != 3) throw Error(ErrorCode::kMalformedRow, ctx + ": expected 3 fields");
    const auto [it, inserted] = index.emplace(row[0], out.size());
    if (inserted) out.push_back({row[0], row[1], {}});
    Template& t = out[it->second];
    if (t.subject_id != row[1]) {
      throw Error(ErrorCode::kMalformedRow, ctx + ": template '" + t.template_id + "' mixes subjects");
    }
    if (corpus != nullptr) {
      const FaceRecord* r = corpus->find(row[2]);
      if (r == nullptr) throw Error(ErrorCode::kUnknownImageId, ctx + ": unknown image_id '" + row[2] + "'");
      if (r->subject_id != t.subject_id) {
        throw Error(ErrorCode::kMalformedRow, ctx + ": member '" + row[2] + "' belongs to another subject");
      }
    }
    t.member_ids.push_back(row[2]);
  }
  return out;
}

void save_templates(std::span<const Template> templates, const std::filesystem::path& path) {
  std::string out = "template_id,subject_id,image_id\n";
  for (const auto& t : templates) {
    for (const auto& m : t.member_ids) out += t.template_id + ',' + t.subject_id + ',' + m + '\n';
  }
  csv::write_file(path, out);
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::expect_header(table, {"image_id"});
  std::vector<std::string> ids;
  ids.reserve(table.rows.size());
  for (const auto& row : table.rows) ids.push_back(row[0]);
  return ids;
}

void save_id_list(std::span<const std::string> ids, const std::filesystem::path& path) {
  std::string out = "image_id\n";
  for (const auto& id : ids) out += id + '\n';
  csv::write_file(path, out);
}

}  // namespace faceq
