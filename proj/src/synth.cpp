#include <algorithm>
#include <cmath>
#include <set>

#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/pipeline.hpp"
#include "faceq/random.hpp"

namespace faceq::pipeline {

namespace {

std::string image_name(std::size_t subject, std::size_t image) {
  return "s" + std::to_string(subject) + "_" + std::to_string(image);
}

std::string subject_name(std::size_t subject) { return "s" + std::to_string(subject); }

}  // namespace

SynthCorpus synth_corpus(const SynthOptions& o) {
  if (o.n_subjects < 1 || o.images_per_subject < 1 || o.dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpus counts must be at least 1");
  }
  Rng rng(o.seed);
  SynthCorpus out;

  const std::size_t d_quality = std::max<std::size_t>(1, o.dim / 2);
  std::vector<double> loading(o.dim);
  for (std::size_t k = 0; k < o.dim; ++k) {
    const double a = rng.uniform(0.5, 1.5);
    loading[k] = rng.coin() ? a : -a;
  }

  std::vector<FaceRecord> records;
  std::vector<double> q_of;
  for (std::size_t s = 0; s < o.n_subjects; ++s) {
    std::vector<double> embedding(o.dim);
    for (auto& e : embedding) e = rng.normal();
    for (std::size_t i = 0; i < o.images_per_subject; ++i) {
      FaceRecord r;
      r.image_id = image_name(s, i);
      r.subject_id = subject_name(s);
      const double q = rng.uniform();
      r.features.resize(o.dim);
      for (std::size_t k = 0; k < o.dim; ++k) {
        const double signal = k < d_quality ? loading[k] * q : embedding[k] + 0.3 * rng.normal();
        r.features[k] = signal + o.feature_noise * rng.normal();
      }
      out.latent.set(r.image_id, q);
      q_of.push_back(q);
      records.push_back(std::move(r));
    }
  }
  out.corpus = FeatureCorpus(std::move(records));

  // Gallery: best image per subject; the rest are probes.
  std::vector<std::size_t> gallery_index(o.n_subjects);
  for (std::size_t s = 0; s < o.n_subjects; ++s) {
    std::size_t best = s * o.images_per_subject;
    for (std::size_t i = 1; i < o.images_per_subject; ++i) {
      const std::size_t idx = s * o.images_per_subject + i;
      if (q_of[idx] > q_of[best]) best = idx;
    }
    gallery_index[s] = best;
    out.gallery_ids.push_back(out.corpus.records()[best].image_id);
  }
  for (std::size_t idx = 0; idx < out.corpus.size(); ++idx) {
    if (gallery_index[idx / o.images_per_subject] != idx) out.probe_ids.push_back(out.corpus.records()[idx].image_id);
  }

  std::vector<ScoreEntry> scores;
  if (o.n_subjects >= 2) {
    std::vector<double> pool(o.n_subjects - 1);
    for (auto& v : pool) v = rng.normal(o.impostor_mean, o.impostor_sd);
    for (std::size_t idx = 0; idx < out.corpus.size(); ++idx) {
      const std::size_t s = idx / o.images_per_subject;
      if (gallery_index[s] == idx) continue;
      const auto& probe = out.corpus.records()[idx];
      std::vector<double> mine = pool;
      rng.shuffle(std::span<double>(mine));
      std::size_t next = 0;
      for (std::size_t g = 0; g < o.n_subjects; ++g) {
        const std::string& gid = out.gallery_ids[g];
        double score;
        if (g == s) {
          score = o.genuine_base - o.genuine_drop * (1.0 - q_of[idx]) + o.score_noise * rng.normal();
        } else {
          score = mine[next++] + (o.impostor_jitter > 0.0 ? o.impostor_jitter * rng.normal() : 0.0);
        }
        scores.push_back({probe.image_id, gid, score});
      }
    }
  }
  out.scores = ScoreSet(std::move(scores));

  const std::size_t m = out.corpus.size();
  if (m >= 2) {
    const std::size_t total = m * (m - 1) / 2;
    for (std::size_t w = 0; w < o.n_workers; ++w) {
      const std::string worker = "w" + std::to_string(w);
      out.worker_ids.push_back(worker);
      const std::size_t count = std::min(o.comparisons_per_worker, total);
      std::set<std::pair<std::size_t, std::size_t>> used;
      while (used.size() < count) {
        std::size_t a = rng.index(m), b = rng.index(m);
        if (a == b) continue;
        if (!used.insert({std::min(a, b), std::max(a, b)}).second) continue;
        const double diff = q_of[a] - q_of[b];
        pairwise::Coarse c;
        if (std::abs(diff) < o.similar_band) {
          c = pairwise::Coarse::kSimilar;
        } else {
          c = diff > 0.0 ? pairwise::Coarse::kLeft : pairwise::Coarse::kRight;
          if (o.flip_prob > 0.0 && rng.uniform() < o.flip_prob) c = pairwise::mirror(c);
        }
        out.comparisons.push_back({worker, out.corpus.records()[a].image_id, out.corpus.records()[b].image_id, c});
      }
    }
  }
  return out;
}

SynthTemplates synth_templates(const TemplateSynthOptions& o) {
  if (o.n_subjects < 2 || o.min_members < 1 || o.max_members < o.min_members) {
    throw Error(ErrorCode::kInvalidArgument, "template synthesis needs >= 2 subjects and a valid member range");
  }
  Rng rng(o.seed);
  SynthTemplates out;
  std::vector<FaceRecord> records;
  for (std::size_t s = 0; s < o.n_subjects; ++s) {
    for (const char* side : {"g", "p"}) {
      Template t;
      t.template_id = subject_name(s) + side;
      t.subject_id = subject_name(s);
      const std::size_t members = o.min_members + rng.index(o.max_members - o.min_members + 1);
      for (std::size_t i = 0; i < members; ++i) {
        FaceRecord r;
        r.image_id = t.template_id + "_" + std::to_string(i);
        r.subject_id = t.subject_id;
        const double q = rng.uniform();
        r.features = {q};
        out.latent.set(r.image_id, q);
        t.member_ids.push_back(r.image_id);
        records.push_back(std::move(r));
      }
      out.templates.push_back(std::move(t));
    }
  }
  out.corpus = FeatureCorpus(std::move(records));

  std::vector<ScoreEntry> scores;
  auto add_pairs = [&](const Template& g, const Template& p, bool genuine) {
    for (const auto& pid : p.member_ids) {
      for (const auto& gid : g.member_ids) {
        double score;
        if (genuine) {
          const double qa = out.latent.at(pid), qb = out.latent.at(gid);
          score = o.genuine_base - o.genuine_drop * ((1.0 - qa) + (1.0 - qb)) / 2.0 +
                  (o.genuine_noise > 0.0 ? o.genuine_noise * rng.normal() : 0.0);
        } else {
          score = rng.normal(o.impostor_mean, o.impostor_sd);
        }
        scores.push_back({pid, gid, score});
      }
    }
  };
  const std::size_t n_imp = std::min(o.impostors_per_template, o.n_subjects - 1);
  for (std::size_t s = 0; s < o.n_subjects; ++s) {
    const Template& g = out.templates[2 * s];
    const Template& p = out.templates[2 * s + 1];
    out.comparisons.push_back({g.template_id, p.template_id});
    add_pairs(g, p, true);
    for (std::size_t k = 1; k <= n_imp; ++k) {
      const Template& other = out.templates[2 * ((s + k) % o.n_subjects) + 1];
      out.comparisons.push_back({g.template_id, other.template_id});
      add_pairs(g, other, false);
    }
  }
  out.pair_scores = ScoreSet(std::move(scores));
  return out;
}

void save_synth(const SynthCorpus& synth, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_features(synth.corpus, dir / "features.csv");
  save_quality(synth.latent, dir / "latent.csv");
  save_scores(synth.scores, dir / "scores.csv");
  pairwise::save_comparisons(synth.comparisons, dir / "comparisons.csv");
  save_id_list(synth.gallery_ids, dir / "gallery.csv");
  save_id_list(synth.probe_ids, dir / "probes.csv");
}

}  // namespace faceq::pipeline
