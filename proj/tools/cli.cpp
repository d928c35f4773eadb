#include "faceq/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "faceq/corpus.hpp"
#include "faceq/csv.hpp"
#include "faceq/error.hpp"
#include "faceq/eval.hpp"
#include "faceq/matcomp.hpp"
#include "faceq/mqv.hpp"
#include "faceq/pairwise.hpp"
#include "faceq/pipeline.hpp"
#include "faceq/service.hpp"
#include "faceq/stats.hpp"
#include "faceq/svr.hpp"

namespace faceq::cli {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& f : csv::split(text)) out.push_back(csv::parse_double(f, what));
  return out;
}

svr::TargetKind parse_target_kind(const std::string& s) {
  if (s == "hqv" || s == "HQV") return svr::TargetKind::kHqv;
  if (s == "mqv" || s == "MQV") return svr::TargetKind::kMqv;
  throw Error(ErrorCode::kInvalidArgument, "target kind must be hqv or mqv");
}

// Records with a target value and a successful detection, corpus order.
FeatureCorpus training_rows(const FeatureCorpus& corpus, const QualityAssignment& targets) {
  std::vector<FaceRecord> rows;
  for (const auto& r : corpus.records()) {
    if (r.detect_ok && targets.contains(r.image_id)) rows.push_back(r);
  }
  return FeatureCorpus(std::move(rows));
}

std::vector<std::string> subjects_of(const FeatureCorpus& corpus) {
  std::vector<std::string> s;
  for (const auto& r : corpus.records()) s.push_back(r.subject_id);
  return s;
}

std::vector<svr::SvrParams> grid_from(const std::string& path) {
  return path.empty() ? svr::default_grid() : svr::load_grid(path);
}

void save_cells(const svr::GridSearchResult& result, const fs::path& path) {
  std::string out = "C,gamma,epsilon,mean_rho,mean_mse,failed\n";
  for (const auto& c : result.cells) {
    out += csv::format(c.params.C) + ',' + csv::format(c.params.gamma) + ',' + csv::format(c.params.epsilon) + ',' +
           csv::format(c.mean_rho) + ',' + csv::format(c.mean_mse) + ',' + (c.failed ? "1" : "0") + '\n';
  }
  csv::write_file(path, out);
}

struct SessionArgs {
  std::string workspace;
  std::string config;
  std::string rater;
  std::string session;
  std::size_t position = 0;
  std::string response;
  std::string out;
};

service::ServiceConfig service_config(const SessionArgs& a) {
  service::ServiceConfig cfg;
  cfg.workspace = a.workspace;
  const fs::path stored = fs::path(a.workspace) / "session_config.json";
  if (!a.config.empty()) {
    cfg.session = service::load_session_config(a.config);
    if (!fs::exists(stored)) {
      fs::create_directories(a.workspace);
      fs::copy_file(a.config, stored);
    }
  } else {
    cfg.session = service::load_session_config(stored);
  }
  if (const char* token = std::getenv("FACEQ_ADMIN_TOKEN")) cfg.admin_token = token;
  return cfg;
}

int report(std::ostream& out, std::ostream& err, const service::Reply& r) {
  if (r.status >= 400) {
    err << r.body << '\n';
    return 2;
  }
  out << r.body << '\n';
  return 0;
}

service::HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"faceq: face image quality targets, prediction and evaluation"};
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::function<int()>>> actions;
  int status = 0;

  // ingest
  std::string in_features, in_scores, in_templates, in_out;
  auto* ingest = app.add_subcommand("ingest", "Validate input files and copy them into a workspace");
  ingest->add_option("--features", in_features, "Features file")->required();
  ingest->add_option("--scores", in_scores, "Scores file");
  ingest->add_option("--templates", in_templates, "Templates file");
  ingest->add_option("--out", in_out, "Workspace directory")->required();
  actions.emplace_back(ingest, [&] {
    const FeatureCorpus corpus = load_features(in_features);
    fs::create_directories(in_out);
    save_features(corpus, fs::path(in_out) / "features.csv");
    out << "features: " << corpus.size() << " records, dim " << corpus.dim() << ", "
        << corpus.subjects().size() << " subjects\n";
    if (!in_scores.empty()) {
      const ScoreSet scores = load_scores(in_scores, corpus);
      save_scores(scores, fs::path(in_out) / "scores.csv");
      out << "scores: " << scores.size() << " pairs\n";
    }
    if (!in_templates.empty()) {
      const auto templates = load_templates(in_templates, &corpus);
      save_templates(templates, fs::path(in_out) / "templates.csv");
      out << "templates: " << templates.size() << "\n";
    }
    return 0;
  });

  // session
  SessionArgs sa;
  auto* session = app.add_subcommand("session", "File-backed annotation sessions");
  session->require_subcommand(1);
  auto add_ws = [&](CLI::App* c) {
    c->add_option("--workspace", sa.workspace, "Workspace directory")->required();
    c->add_option("--session-config", sa.config, "Session config JSON (stored in the workspace on first use)");
  };
  auto* s_new = session->add_subcommand("new", "Create a session and print its id");
  add_ws(s_new);
  s_new->add_option("--rater", sa.rater, "Rater id")->required();
  actions.emplace_back(s_new, [&] {
    service::AnnotationService svc(service_config(sa));
    return report(out, err, svc.create_session(sa.rater));
  });
  auto* s_next = session->add_subcommand("next", "Show the next pair of a session");
  add_ws(s_next);
  s_next->add_option("--session", sa.session, "Session id")->required();
  actions.emplace_back(s_next, [&] {
    service::AnnotationService svc(service_config(sa));
    return report(out, err, svc.next_pair(sa.session));
  });
  auto* s_respond = session->add_subcommand("respond", "Record a response");
  add_ws(s_respond);
  s_respond->add_option("--session", sa.session, "Session id")->required();
  s_respond->add_option("--position", sa.position, "Schedule position")->required();
  s_respond->add_option("--response", sa.response, "LEFT_MUCH|LEFT_SLIGHT|SIMILAR|RIGHT_SLIGHT|RIGHT_MUCH")->required();
  actions.emplace_back(s_respond, [&] {
    service::AnnotationService svc(service_config(sa));
    return report(out, err, svc.submit(sa.session, sa.position, sa.response));
  });
  auto* s_status = session->add_subcommand("status", "Show session progress");
  add_ws(s_status);
  s_status->add_option("--session", sa.session, "Session id")->required();
  actions.emplace_back(s_status, [&] {
    service::AnnotationService svc(service_config(sa));
    return report(out, err, svc.status(sa.session));
  });
  auto* s_export = session->add_subcommand("export", "Write comparisons of COMPLETE sessions");
  add_ws(s_export);
  s_export->add_option("--out", sa.out, "Comparisons file")->required();
  actions.emplace_back(s_export, [&] {
    service::AnnotationService svc(service_config(sa));
    const auto comparisons = svc.accepted_comparisons();
    pairwise::save_comparisons(comparisons, sa.out);
    out << comparisons.size() << " comparisons\n";
    return 0;
  });

  // complete
  std::string c_comparisons, c_out, c_aggregate = "median", c_matrix, c_workers, c_images, c_report;
  matcomp::CompletionParams cp;
  auto* complete = app.add_subcommand("complete", "Matrix completion, row normalisation and aggregation");
  complete->add_option("--comparisons", c_comparisons, "Comparisons file")->required();
  complete->add_option("--rank", cp.rank, "Factor rank")->capture_default_str();
  complete->add_option("--seed", cp.seed, "Random seed")->required();
  complete->add_option("--out", c_out, "Quality file")->required();
  complete->add_option("--aggregate", c_aggregate, "median|mean|min|max")->capture_default_str();
  complete->add_option("--matrix", c_matrix, "Also write the completed matrix (long form)");
  complete->add_option("--workers", c_workers, "Worker id list (header image_id); default: raters in the file");
  complete->add_option("--images", c_images, "Image id list; default: images in the file");
  complete->add_option("--margin", cp.margin)->capture_default_str();
  complete->add_option("--similar-weight", cp.similar_weight)->capture_default_str();
  complete->add_option("--lambda", cp.l2_reg)->capture_default_str();
  complete->add_option("--learn-rate", cp.learn_rate)->capture_default_str();
  complete->add_option("--max-iters", cp.max_iters)->capture_default_str();
  complete->add_option("--tol", cp.tol)->capture_default_str();
  complete->add_option("--report", c_report, "Write uncovered images and the objective here");
  actions.emplace_back(complete, [&] {
    const auto comparisons = pairwise::load_comparisons(c_comparisons);
    const auto workers = c_workers.empty() ? std::vector<std::string>{} : load_id_list(c_workers);
    const auto images = c_images.empty() ? std::vector<std::string>{} : load_id_list(c_images);
    const auto result = pipeline::human_quality(comparisons, cp, matcomp::parse_aggregate(c_aggregate), workers, images);
    save_quality(result.quality, c_out);
    if (!c_matrix.empty()) matcomp::save_matrix(result.completion.matrix, c_matrix);
    if (!c_report.empty()) {
      std::string r = "# objective=" + csv::format(result.completion.objective) +
                      " iterations=" + std::to_string(result.completion.iterations) +
                      " converged=" + (result.completion.converged ? "1" : "0") + "\nimage_id\n";
      for (const auto& id : result.completion.uncovered) r += id + '\n';
      csv::write_file(c_report, r);
    }
    out << "completed " << result.completion.matrix.worker_ids.size() << " x "
        << result.completion.matrix.image_ids.size() << " (rank " << result.completion.matrix.rank_used
        << ", objective " << csv::format(result.completion.objective) << ", "
        << result.completion.uncovered.size() << " uncovered)\n";
    return 0;
  });

  // mqv
  std::string m_features, m_scores, m_gallery, m_probes, m_out, m_failures;
  auto* mqv_cmd = app.add_subcommand("mqv", "Impostor-normalised genuine scores per probe");
  mqv_cmd->add_option("--features", m_features, "Features file (subject labels)")->required();
  mqv_cmd->add_option("--scores", m_scores, "Scores file")->required();
  mqv_cmd->add_option("--gallery", m_gallery, "Gallery id list")->required();
  mqv_cmd->add_option("--probes", m_probes, "Probe id list")->required();
  mqv_cmd->add_option("--out", m_out, "Quality file")->required();
  mqv_cmd->add_option("--failures", m_failures, "Per-probe failure report");
  actions.emplace_back(mqv_cmd, [&] {
    const FeatureCorpus corpus = load_features(m_features);
    const ScoreSet scores = load_scores(m_scores, corpus);
    const auto result = mqv::compute_mqv(scores, corpus, load_id_list(m_gallery), load_id_list(m_probes));
    save_quality(result.quality, m_out);
    if (!m_failures.empty()) mqv::save_failures(result.failures, m_failures);
    out << result.quality.size() << " probes, " << result.failures.size() << " failures\n";
    return 0;
  });

  // train
  std::string t_features, t_targets, t_grid, t_out, t_kind = "hqv", t_cells;
  std::size_t t_folds = 5, jobs = 1;
  std::uint64_t t_seed = 0;
  auto* train = app.add_subcommand("train", "Grid search with subject-disjoint folds, then fit on all rows");
  train->add_option("--features", t_features, "Features file")->required();
  train->add_option("--targets", t_targets, "Quality targets file")->required();
  train->add_option("--grid", t_grid, "Grid file (C,gamma,epsilon); default grid when omitted");
  train->add_option("--folds", t_folds)->capture_default_str();
  train->add_option("--seed", t_seed)->required();
  train->add_option("--out", t_out, "Model file")->required();
  train->add_option("--target-kind", t_kind, "hqv|mqv")->capture_default_str();
  train->add_option("--cells", t_cells, "Write per-cell scores here");
  train->add_option("--jobs", jobs, "Parallel grid cells")->capture_default_str();
  actions.emplace_back(train, [&] {
    const QualityAssignment targets = load_quality(t_targets);
    const FeatureCorpus rows = training_rows(load_features(t_features), targets);
    const auto grid = grid_from(t_grid);
    svr::GridOptions go;
    go.jobs = jobs;
    go.target_kind = parse_target_kind(t_kind);
    const auto result = svr::grid_search(pipeline::feature_matrix(rows), pipeline::targets_for(rows, targets),
                                         subjects_of(rows), grid, t_folds, t_seed, go);
    svr::save_model(result.model, t_out);
    if (!t_cells.empty()) save_cells(result, t_cells);
    out << "best C=" << csv::format(result.best.C) << " gamma=" << csv::format(result.best.gamma)
        << " epsilon=" << csv::format(result.best.epsilon) << " rho=" << csv::format(result.cells[result.best_index].mean_rho)
        << " (" << rows.size() << " rows, " << result.model.dual_coefs.size() << " support vectors)\n";
    if (!result.model.converged) {
      err << "E_NO_CONVERGENCE: warning: solver hit the update cap; model flagged\n";
    }
    return 0;
  });

  // predict
  std::string p_model, p_features, p_out;
  bool p_floor = true;
  auto* predict = app.add_subcommand("predict", "Predict quality for every record");
  predict->add_option("--model", p_model, "Model file")->required();
  predict->add_option("--features", p_features, "Features file")->required();
  predict->add_option("--out", p_out, "Quality file")->required();
  predict->add_flag("--floor,!--no-floor", p_floor, "Give failed detections the lowest quality (default on)");
  actions.emplace_back(predict, [&] {
    const svr::QualityModel model = svr::load_model(p_model);
    const FeatureCorpus corpus = load_features(p_features);
    if (!corpus.empty() && corpus.dim() != model.dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "model expects " + std::to_string(model.dim()) +
                                                     " features, file has " + std::to_string(corpus.dim()));
    }
    QualityAssignment q;
    for (const auto& r : corpus.records()) {
      if (p_floor && !r.detect_ok) continue;
      q.set(r.image_id, svr::predict(model, r.features));
    }
    if (p_floor) {
      const QualityAssignment floored = eval::apply_failure_floor(q, corpus);
      q = QualityAssignment();
      for (const auto& r : corpus.records()) q.set(r.image_id, floored.at(r.image_id));
    }
    save_quality(q, p_out);
    out << q.size() << " predictions\n";
    return 0;
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Error-vs-reject, ROC and template sweep curves");
  evaluate->require_subcommand(1);
  std::string e_features, e_scores, e_quality, e_out, e_kind = "fnmr", e_far = "0.001,0.01,0.1";
  std::string e_templates, e_comparisons, e_percentiles = "0,10,20,30,40,50,60,70,80,90", e_rule = "mean";
  std::string e_reference;
  double e_initial = 0.2, e_fmr = 0.01;
  auto* evr = evaluate->add_subcommand("evr", "Error-vs-reject curve at a fixed threshold");
  evr->add_option("--features", e_features, "Features file (subject labels)")->required();
  evr->add_option("--scores", e_scores, "Scores file")->required();
  evr->add_option("--quality", e_quality, "Quality for every scored probe")->required();
  evr->add_option("--kind", e_kind, "fnmr|fmr")->capture_default_str();
  evr->add_option("--initial", e_initial, "Error on the full set that fixes the threshold")->capture_default_str();
  evr->add_option("--out", e_out, "Curve file")->required();
  actions.emplace_back(evr, [&] {
    const FeatureCorpus corpus = load_features(e_features);
    const ScoreSet scores = load_scores(e_scores, corpus);
    const QualityAssignment q = load_quality(e_quality);
    eval::ErrorKind kind;
    if (e_kind == "fnmr" || e_kind == "FNMR") {
      kind = eval::ErrorKind::kFnmr;
    } else if (e_kind == "fmr" || e_kind == "FMR") {
      kind = eval::ErrorKind::kFmr;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "--kind must be fnmr or fmr");
    }
    const auto curve = eval::evr_curve(scores, corpus, q, kind, e_initial);
    const auto [gen, imp] = eval::split_scores(scores, corpus);
    const double fmr_at = imp.empty() ? 0.0 : eval::fmr(imp, curve.fixed_threshold);
    eval::save_curve(e_out, eval::to_string(kind), curve.fixed_threshold, fmr_at, curve.reject_fractions,
                     curve.error_values);
    out << "threshold " << csv::format(curve.fixed_threshold) << ", error " << csv::format(curve.error_values.front())
        << " -> " << csv::format(curve.error_values.back()) << "\n";
    return 0;
  });
  auto* roc_cmd = evaluate->add_subcommand("roc", "TAR at fixed FAR values");
  roc_cmd->add_option("--features", e_features, "Features file (subject labels)")->required();
  roc_cmd->add_option("--scores", e_scores, "Scores file")->required();
  roc_cmd->add_option("--far", e_far, "Comma-separated FAR values")->capture_default_str();
  roc_cmd->add_option("--out", e_out, "Curve file")->required();
  actions.emplace_back(roc_cmd, [&] {
    const FeatureCorpus corpus = load_features(e_features);
    const auto [gen, imp] = eval::split_scores(load_scores(e_scores, corpus), corpus);
    const auto fars = parse_list(e_far, "--far");
    const auto points = eval::roc(gen, imp, fars);
    std::vector<double> x, y;
    std::vector<std::string> extra;
    for (const auto& p : points) {
      x.push_back(p.far);
      y.push_back(p.tar);
      extra.push_back("far=" + csv::format(p.far) + " threshold=" + csv::format(p.threshold));
    }
    eval::save_curve(e_out, "ROC", points.empty() ? 0.0 : points.front().threshold,
                     fars.empty() ? 0.0 : fars.front(), x, y, extra);
    return 0;
  });
  auto* sweep = evaluate->add_subcommand("sweep", "FNMR vs quality-percentile gate for template fusion");
  sweep->add_option("--templates", e_templates, "Templates file")->required();
  sweep->add_option("--comparisons", e_comparisons, "Template comparisons (gallery_template_id,probe_template_id)")->required();
  sweep->add_option("--scores", e_scores, "Member pair scores")->required();
  sweep->add_option("--quality", e_quality, "Quality for every template member")->required();
  sweep->add_option("--percentiles", e_percentiles)->capture_default_str();
  sweep->add_option("--fmr", e_fmr, "FMR that fixes the score threshold on the ungated fusion")->capture_default_str();
  sweep->add_option("--rule", e_rule, "mean|max")->capture_default_str();
  sweep->add_option("--reference", e_reference, "Quality file defining the percentiles (default: template members)");
  sweep->add_option("--out", e_out, "Curve file")->required();
  actions.emplace_back(sweep, [&] {
    const auto templates = load_templates(e_templates);
    const auto comparisons = eval::load_template_comparisons(e_comparisons);
    const ScoreSet scores = load_scores_unchecked(e_scores);
    const QualityAssignment q = load_quality(e_quality);
    std::vector<double> reference;
    std::string label = "evaluation-split";
    if (e_reference.empty()) {
      reference = eval::member_qualities(templates, q);
    } else {
      for (const auto& [id, v] : load_quality(e_reference).entries()) reference.push_back(v);
      label = "file:" + fs::path(e_reference).filename().string();
    }
    const auto result = eval::quality_sweep(templates, comparisons, scores, q, parse_list(e_percentiles, "--percentiles"),
                                            e_fmr, reference, eval::parse_fusion_rule(e_rule), label);
    std::vector<double> x, y;
    for (const auto& p : result.points) {
      x.push_back(p.percentile);
      y.push_back(p.fnmr);
    }
    const std::vector<std::string> extra{"reference=" + result.reference};
    eval::save_curve(e_out, "SWEEP", result.score_threshold, e_fmr, x, y, extra);
    return 0;
  });

  // protocol
  auto* protocol = app.add_subcommand("protocol", "Within-corpus splits or cross-corpus prediction");
  protocol->require_subcommand(1);
  std::string r_features, r_targets, r_test, r_grid, r_out;
  std::size_t r_splits = 10, r_folds = 5;
  double r_frac = 2.0 / 3.0;
  std::uint64_t r_seed = 0;
  auto* within = protocol->add_subcommand("within", "Outer subject splits with inner grid search");
  within->add_option("--features", r_features, "Features file (rows to use)")->required();
  within->add_option("--targets", r_targets, "Targets for every row")->required();
  within->add_option("--splits", r_splits)->capture_default_str();
  within->add_option("--train-frac", r_frac)->capture_default_str();
  within->add_option("--folds", r_folds)->capture_default_str();
  within->add_option("--grid", r_grid);
  within->add_option("--seed", r_seed)->required();
  within->add_option("--jobs", jobs)->capture_default_str();
  within->add_option("--out", r_out, "Summary file")->required();
  actions.emplace_back(within, [&] {
    pipeline::ProtocolOptions po;
    po.splits = r_splits;
    po.train_frac = r_frac;
    po.folds = r_folds;
    po.grid = grid_from(r_grid);
    po.seed = r_seed;
    po.grid_options.jobs = jobs;
    const auto summary = pipeline::protocol_within(load_features(r_features), load_quality(r_targets), po);
    pipeline::save_summary(summary, r_out);
    out << "rho " << csv::format(summary.mean_rho) << " +/- " << csv::format(summary.std_rho) << "\n";
    return 0;
  });
  auto* cross = protocol->add_subcommand("cross", "Train on one corpus, predict another");
  cross->add_option("--features", r_features, "Training features")->required();
  cross->add_option("--targets", r_targets, "Training targets")->required();
  cross->add_option("--test", r_test, "Test features")->required();
  cross->add_option("--folds", r_folds)->capture_default_str();
  cross->add_option("--grid", r_grid);
  cross->add_option("--seed", r_seed)->required();
  cross->add_option("--jobs", jobs)->capture_default_str();
  cross->add_option("--out", r_out, "Quality file for the test corpus")->required();
  actions.emplace_back(cross, [&] {
    pipeline::ProtocolOptions po;
    po.folds = r_folds;
    po.grid = grid_from(r_grid);
    po.seed = r_seed;
    po.grid_options.jobs = jobs;
    const QualityAssignment targets = load_quality(r_targets);
    const auto result = pipeline::protocol_cross(training_rows(load_features(r_features), targets), targets,
                                                 load_features(r_test), po);
    save_quality(result.predictions, r_out);
    return 0;
  });

  // synth
  pipeline::SynthOptions so;
  std::string s_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic workspace");
  synth->add_option("--subjects", so.n_subjects)->required();
  synth->add_option("--per-subject", so.images_per_subject)->required();
  synth->add_option("--dim", so.dim)->required();
  synth->add_option("--seed", so.seed)->required();
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->add_option("--feature-noise", so.feature_noise)->capture_default_str();
  synth->add_option("--score-noise", so.score_noise)->capture_default_str();
  synth->add_option("--workers", so.n_workers)->capture_default_str();
  synth->add_option("--comparisons-per-worker", so.comparisons_per_worker)->capture_default_str();
  synth->add_option("--flip", so.flip_prob)->capture_default_str();
  synth->add_option("--similar-band", so.similar_band)->capture_default_str();
  actions.emplace_back(synth, [&] {
    const auto s = pipeline::synth_corpus(so);
    pipeline::save_synth(s, s_out);
    out << s.corpus.size() << " images, " << s.scores.size() << " scores, " << s.comparisons.size()
        << " comparisons\n";
    return 0;
  });

  // serve
  SessionArgs va;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--workspace", va.workspace, "Workspace directory")->required();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--session-config", va.config, "Session config JSON");
  actions.emplace_back(serve, [&] {
    service::AnnotationService svc(service_config(va));
    service::HttpServer server(svc);
    const int bound = server.bind(host, port);
    out << "listening on " << host << ":" << bound << std::endl;
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    server.listen();
    g_server = nullptr;
    return 0;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& [cmd, action] : actions) {
      if (cmd->parsed()) {
        status = action();
        break;
      }
    }
  } catch (const Error& e) {
    err << error_code_name(e.code()) << ": " << e.what() << '\n';
    return is_numeric_failure(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    err << "E_INTERNAL: " << e.what() << '\n';
    return 2;
  }
  return status;
}

}  // namespace faceq::cli
