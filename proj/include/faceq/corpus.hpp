#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace faceq {

enum class MediaKind { kStill, kFrame };

struct FaceRecord {
  std::string image_id;
  std::string subject_id;
  std::vector<double> features;
  MediaKind media_kind = MediaKind::kStill;
  bool detect_ok = true;

  friend bool operator==(const FaceRecord&, const FaceRecord&) = default;
};

// Immutable collection of face records sharing one feature dimension.
// dim() is 0 for an empty corpus.
class FeatureCorpus {
 public:
  FeatureCorpus() = default;
  explicit FeatureCorpus(std::vector<FaceRecord> records);

  std::span<const FaceRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t dim() const { return dim_; }

  const FaceRecord* find(std::string_view image_id) const;
  // Throws UnknownImageId.
  const FaceRecord& at(std::string_view image_id) const;
  std::optional<std::size_t> index_of(std::string_view image_id) const;

  // Distinct subject ids in order of first appearance.
  std::vector<std::string> subjects() const;
  std::size_t subject_image_count(std::string_view subject_id) const;

  // Records whose ids appear in `image_ids`, in corpus order.
  FeatureCorpus subset(std::span<const std::string> image_ids) const;
  FeatureCorpus subset_subjects(std::span<const std::string> subject_ids) const;

 private:
  std::vector<FaceRecord> records_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> subject_counts_;
};

struct ScoreEntry {
  std::string probe_id;
  std::string gallery_id;
  double score = 0.0;  // higher means more similar

  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

class ScoreSet {
 public:
  ScoreSet() = default;
  // Throws DuplicatePair.
  explicit ScoreSet(std::vector<ScoreEntry> entries);

  std::span<const ScoreEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::optional<double> find(std::string_view probe_id, std::string_view gallery_id) const;

 private:
  std::vector<ScoreEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Genuine iff probe and gallery resolve to the same subject. Throws
// UnknownImageId when either side is missing from the corpus.
bool is_genuine(const ScoreEntry& entry, const FeatureCorpus& corpus);

struct Template {
  std::string template_id;
  std::string subject_id;
  std::vector<std::string> member_ids;

  friend bool operator==(const Template&, const Template&) = default;
};

// image_id -> quality, insertion order preserved.
class QualityAssignment {
 public:
  void set(const std::string& image_id, double quality);
  std::optional<double> find(std::string_view image_id) const;
  double at(std::string_view image_id) const;  // throws MissingQuality
  bool contains(std::string_view image_id) const { return find(image_id).has_value(); }
  std::span<const std::pair<std::string, double>> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const QualityAssignment& a, const QualityAssignment& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::pair<std::string, double>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PartitionReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

PartitionReport validate_partition(const FeatureCorpus& corpus,
                                   std::span<const std::string> gallery_ids,
                                   std::span<const std::string> probe_ids);

// File formats. Every loader requires its header row.
FeatureCorpus load_features(const std::filesystem::path& path);
void save_features(const FeatureCorpus& corpus, const std::filesystem::path& path);
std::string format_features(const FeatureCorpus& corpus);

ScoreSet load_scores(const std::filesystem::path& path, const FeatureCorpus& corpus);
ScoreSet load_scores_unchecked(const std::filesystem::path& path);
void save_scores(const ScoreSet& scores, const std::filesystem::path& path);

QualityAssignment load_quality(const std::filesystem::path& path);
void save_quality(const QualityAssignment& quality, const std::filesystem::path& path);
std::string format_quality(const QualityAssignment& quality);

// Rows are grouped by template_id in order of first appearance. When a corpus
// is given, members must exist and belong to the template's subject.
std::vector<Template> load_templates(const std::filesystem::path& path,
                                     const FeatureCorpus* corpus = nullptr);
void save_templates(std::span<const Template> templates, const std::filesystem::path& path);

// Single-column list with header `image_id`.
std::vector<std::string> load_id_list(const std::filesystem::path& path);
void save_id_list(std::span<const std::string> ids, const std::filesystem::path& path);

}  // namespace faceq
