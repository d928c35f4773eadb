#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "faceq/corpus.hpp"
#include "faceq/error.hpp"
#include "faceq/eval.hpp"
#include "faceq/matcomp.hpp"
#include "faceq/mqv.hpp"
#include "faceq/pairwise.hpp"
#include "faceq/pipeline.hpp"
#include "faceq/stats.hpp"
#include "faceq/svr.hpp"

namespace py = pybind11;
using namespace faceq;

namespace {



QualityAssignment from_dict(const py::dict& d) {
  QualityAssignment q;
  for (const auto& [k, v] : d) q.set(k.cast<std::string>(), v.cast<double>());
  return q;
}

py::dict to_dict(const QualityAssignment& q) {
  py::dict d;
  for (const auto& [k, v] : q.entries()) d[py::str(k)] = v;
  return d;
}

pairwise::ComparisonSet from_tuples(const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& rows) {
  pairwise::ComparisonSet out;
  for (const auto& [rater, left, right, verdict] : rows) {
    const auto c = pairwise::parse_coarse(verdict);
    if (!c) throw Error(ErrorCode::kInvalidArgument, "unknown verdict: " + verdict);
    out.push_back({rater, left, right, *c});
  }
  return out;
}

std::vector<std::tuple<std::string, std::string, std::string, std::string>> to_tuples(const pairwise::ComparisonSet& cs) {
  std::vector<std::tuple<std::string, std::string, std::string, std::string>> out;
  for (const auto& c : cs) out.emplace_back(c.rater_id, c.left_id, c.right_id, std::string(pairwise::to_string(c.response)));
  return out;
}

eval::ErrorKind parse_kind(const std::string& s) {
  if (s == "fnmr") return eval::ErrorKind::kFnmr;
  if (s == "fmr") return eval::ErrorKind::kFmr;
  throw Error(ErrorCode::kInvalidArgument, "error kind must be fnmr or fmr");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Face image quality: matcher and human quality values, SVR prediction, error-vs-reject evaluation";

  static py::exception<Error> faceq_error(m, "FaceqError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = faceq_error;
      py::object inst = err(e.what());
      inst.attr("code") = error_code_name(e.code());
      PyErr_SetObject(err.ptr(), inst.ptr());
    }
  });

  py::class_<FeatureCorpus>(m, "FeatureCorpus")
      .def("__len__", &FeatureCorpus::size)
      .def_property_readonly("dim", &FeatureCorpus::dim)
      .def_property_readonly("image_ids",
                             [](const FeatureCorpus& c) {
                               std::vector<std::string> ids;
                               for (const auto& r : c.records()) ids.push_back(r.image_id);
                               return ids;
                             })
      .def_property_readonly("subject_ids",
                             [](const FeatureCorpus& c) {
                               std::vector<std::string> ids;
                               for (const auto& r : c.records()) ids.push_back(r.subject_id);
                               return ids;
                             })
      .def_property_readonly("detect_ok",
                             [](const FeatureCorpus& c) {
                               std::vector<bool> ok;
                               for (const auto& r : c.records()) ok.push_back(r.detect_ok);
                               return ok;
                             })
      .def("features", &pipeline::feature_matrix)
      .def("subjects", &FeatureCorpus::subjects)
      .def("subset", [](const FeatureCorpus& c, const std::vector<std::string>& ids) { return c.subset(ids); })
      .def("subset_subjects",
           [](const FeatureCorpus& c, const std::vector<std::string>& ids) { return c.subset_subjects(ids); })
      .def("save", [](const FeatureCorpus& c, const std::filesystem::path& p) { save_features(c, p); });

  py::class_<ScoreSet>(m, "ScoreSet")
      .def("__len__", &ScoreSet::size)
      .def("find", [](const ScoreSet& s, const std::string& p, const std::string& g) { return s.find(p, g); })
      .def("entries",
           [](const ScoreSet& s) {
             std::vector<std::tuple<std::string, std::string, double>> out;
             for (const auto& e : s.entries()) out.emplace_back(e.probe_id, e.gallery_id, e.score);
             return out;
           })
      .def("save", [](const ScoreSet& s, const std::filesystem::path& p) { save_scores(s, p); });

  m.def("load_features", &load_features, py::arg("path"));
  m.def("load_scores", &load_scores, py::arg("path"), py::arg("corpus"));
  m.def("load_quality", [](const std::filesystem::path& p) { return to_dict(load_quality(p)); }, py::arg("path"));
  m.def("save_quality", [](const py::dict& q, const std::filesystem::path& p) { save_quality(from_dict(q), p); },
        py::arg("quality"), py::arg("path"));
  m.def("load_comparisons", [](const std::filesystem::path& p) { return to_tuples(pairwise::load_comparisons(p)); },
        py::arg("path"));

  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });

  m.def("z_score",
        [](double genuine, std::vector<double> impostors) {
          return mqv::z_score(mqv::ProbeScoreProfile::make("probe", genuine, std::move(impostors)));
        },
        py::arg("genuine"), py::arg("impostors"));
  m.def("mqv",
        [](const ScoreSet& scores, const FeatureCorpus& corpus, const std::vector<std::string>& gallery,
           const std::vector<std::string>& probes) {
          const auto r = mqv::compute_mqv(scores, corpus, gallery, probes);
          std::vector<std::pair<std::string, std::string>> failures;
          for (const auto& f : r.failures) failures.emplace_back(f.probe_id, std::string(mqv::failure_name(f.kind)));
          return py::make_tuple(to_dict(r.quality), failures);
        },
        py::arg("scores"), py::arg("corpus"), py::arg("gallery_ids"), py::arg("probe_ids"));

  py::class_<svr::SvrParams>(m, "SvrParams")
      .def(py::init([](double C, double epsilon, double gamma) { return svr::SvrParams{C, epsilon, gamma}; }),
           py::arg("C") = 1.0, py::arg("epsilon") = 0.1, py::arg("gamma") = 1.0)
      .def_readwrite("C", &svr::SvrParams::C)
      .def_readwrite("epsilon", &svr::SvrParams::epsilon)
      .def_readwrite("gamma", &svr::SvrParams::gamma)
      .def("__repr__", [](const svr::SvrParams& p) {
        return "SvrParams(C=" + std::to_string(p.C) + ", epsilon=" + std::to_string(p.epsilon) +
               ", gamma=" + std::to_string(p.gamma) + ")";
      });

  py::class_<svr::QualityModel>(m, "QualityModel")
      .def_readonly("params", &svr::QualityModel::params)
      .def_readonly("bias", &svr::QualityModel::bias)
      .def_readonly("dual_objective", &svr::QualityModel::dual_objective)
      .def_readonly("converged", &svr::QualityModel::converged)
      .def_property_readonly("n_support", [](const svr::QualityModel& q) { return q.dual_coefs.size(); })
      .def_property_readonly("dim", &svr::QualityModel::dim)
      .def("predict", [](const svr::QualityModel& q, const svr::Matrix& x) { return svr::predict(q, x); })
      .def("serialize", &svr::serialize_model)
      .def("save", [](const svr::QualityModel& q, const std::filesystem::path& p) { svr::save_model(q, p); });

  m.def("train",
        [](const svr::Matrix& x, const std::vector<double>& y, const svr::SvrParams& p) { return svr::train(x, y, p); },
        py::arg("features"), py::arg("targets"), py::arg("params"));
  m.def("load_model", &svr::load_model, py::arg("path"));
  m.def("deserialize_model", &svr::deserialize_model, py::arg("text"));
  m.def("default_grid", &svr::default_grid);

  m.def("evr_curve",
        [](const ScoreSet& scores, const FeatureCorpus& corpus, const py::dict& quality, const std::string& kind,
           double initial_error, std::optional<std::vector<double>> fractions) {
          const auto grid = fractions ? *fractions : eval::default_reject_grid();
          const auto c = eval::evr_curve(scores, corpus, from_dict(quality), parse_kind(kind), initial_error, grid);
          py::dict d;
          d["reject_fractions"] = c.reject_fractions;
          d["error_values"] = c.error_values;
          d["threshold"] = c.fixed_threshold;
          d["area"] = eval::area_under(c);
          return d;
        },
        py::arg("scores"), py::arg("corpus"), py::arg("quality"), py::arg("kind") = "fnmr",
        py::arg("initial_error") = 0.2, py::arg("fractions") = py::none());

  m.def("human_quality",
        [](const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& comparisons,
           std::size_t rank, std::uint64_t seed, const std::string& how) {
          matcomp::CompletionParams p;
          p.rank = rank;
          p.seed = seed;
          const auto cs = from_tuples(comparisons);
          const auto r = pipeline::human_quality(cs, p, matcomp::parse_aggregate(how));
          py::dict d;
          d["quality"] = to_dict(r.quality);
          d["matrix"] = r.completion.matrix.values;
          d["worker_ids"] = r.completion.matrix.worker_ids;
          d["image_ids"] = r.completion.matrix.image_ids;
          d["objective"] = r.completion.objective;
          d["converged"] = r.completion.converged;
          return d;
        },
        py::arg("comparisons"), py::arg("rank") = 5, py::arg("seed") = 0, py::arg("aggregate") = "median");

  m.def("synth_corpus",
        [](std::size_t n_subjects, std::size_t images_per_subject, std::size_t dim, std::uint64_t seed,
           std::size_t n_workers, std::size_t comparisons_per_worker, double flip_prob) {
          pipeline::SynthOptions o;
          o.n_subjects = n_subjects;
          o.images_per_subject = images_per_subject;
          o.dim = dim;
          o.seed = seed;
          o.n_workers = n_workers;
          o.comparisons_per_worker = comparisons_per_worker;
          o.flip_prob = flip_prob;
          auto s = pipeline::synth_corpus(o);
          py::dict d;
          d["corpus"] = s.corpus;
          d["latent"] = to_dict(s.latent);
          d["scores"] = s.scores;
          d["comparisons"] = to_tuples(s.comparisons);
          d["gallery_ids"] = s.gallery_ids;
          d["probe_ids"] = s.probe_ids;
          d["worker_ids"] = s.worker_ids;
          return d;
        },
        py::arg("n_subjects") = 100, py::arg("images_per_subject") = 5, py::arg("dim") = 8, py::arg("seed") = 0,
        py::arg("n_workers") = 10, py::arg("comparisons_per_worker") = 1000, py::arg("flip_prob") = 0.0);
}
