#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "longicog/longicog.hpp"

namespace py = pybind11;
using namespace longicog;

namespace {

py::dict summary_dict(const CohortSummary& s) {
  py::dict d;
  d["participants"] = s.participants;
  d["sessions"] = s.sessions;
  d["responses"] = s.responses;
  d["hc_sessions"] = s.hc_sessions;
  d["mci_sessions"] = s.mci_sessions;
  d["transitions"] = s.transitions;
  d["improvements"] = s.improvements;
  d["declines"] = s.declines;
  d["mci_fraction"] = s.mci_fraction;
  return d;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["confusion"] = m.confusion;
  d["total"] = m.total;
  d["accuracy"] = m.accuracy;
  d["macro_precision"] = m.macro_precision;
  d["macro_recall"] = m.macro_recall;
  d["macro_f1"] = m.macro_f1;
  py::list per_class;
  for (const auto& c : m.per_class) {
    py::dict e;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["support"] = c.support;
    per_class.append(e);
  }
  d["per_class"] = per_class;
  return d;
}

LearnerConfig make_learner(const std::string& learner, std::uint64_t seed, int trees, double svm_c,
                           std::optional<double> svm_gamma, double lr, int epochs, int hidden, std::size_t threads) {
  LearnerConfig c;
  c.kind = parse_learner_kind(learner);
  c.seed = seed;
  c.forest.n_trees = trees;
  c.svm.c = svm_c;
  c.svm.gamma = svm_gamma;
  c.mlp.learning_rate = lr;
  c.mlp.epochs = epochs;
  c.mlp.hidden = hidden;
  c.threads = threads;
  c.validate();
  return c;
}

HistoryScheme make_history(const std::string& name, double decay) {
  if (name == "mean") return HistoryScheme::mean();
  if (name == "ewma") return HistoryScheme::ewma(decay);
  throw ValidationError("unknown history scheme '" + name + "' (expected mean|ewma)");
}

}  // namespace

PYBIND11_MODULE(_longicog, m) {
  m.doc() = "Longitudinal cognitive-state detection and change prediction";

  // translators run newest first, so the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<CohortStore>(m, "Cohort")
      .def_static("load", &load_cohort, py::arg("path"))
      .def("save", [](const CohortStore& c, const std::filesystem::path& p) { save_cohort(c, p); }, py::arg("path"))
      .def_property_readonly("modalities",
                             [](const CohortStore& c) {
                               std::vector<std::pair<std::string, std::size_t>> out;
                               for (const auto& mo : c.modalities) out.emplace_back(mo.name, mo.dimension);
                               return out;
                             })
      .def_property_readonly("participants",
                             [](const CohortStore& c) {
                               std::vector<std::string> ids;
                               for (const auto& p : c.participants) ids.push_back(p.id);
                               return ids;
                             })
      .def_property_readonly("n_sessions", [](const CohortStore& c) { return c.sessions.size(); })
      .def("validate",
           [](const CohortStore& c) {
             std::vector<std::pair<std::string, std::string>> out;
             for (const auto& f : validate_cohort(c).findings) out.emplace_back(to_string(f.kind), f.message);
             return out;
           })
      .def("describe", [](const CohortStore& c) { return summary_dict(describe_cohort(c)); })
      .def("ingest",
           [](const CohortStore& c, const std::filesystem::path& path, const std::string& name, std::size_t dim) {
             CohortStore store = c;
             if (!store.find_modality(name)) store.modalities.push_back({name, dim});
             return ingest_features(path, {name, dim}, store).store;
           },
           py::arg("path"), py::arg("modality"), py::arg("dimension"),
           "Returns a new cohort with the feature file attached.")
      .def("__eq__", [](const CohortStore& a, const CohortStore& b) { return a == b; });

  m.def(
      "synth",
      [](std::uint64_t seed, const std::string& schedule, int participants, int questions,
         const std::vector<std::pair<std::string, std::size_t>>& modalities, std::size_t informative_dims,
         double separation, double sigma_session, double sigma_response, double p_flip, double mci_prior) {
        SynthConfig c;
        c.seed = seed;
        c.schedule = parse_schedule(schedule);
        c.n_participants = participants;
        c.n_questions = questions;
        c.modalities.clear();
        for (const auto& [name, dim] : modalities) c.modalities.push_back({name, dim});
        c.informative_dims = informative_dims;
        c.separation = separation;
        c.sigma_session = sigma_session;
        c.sigma_response = sigma_response;
        c.p_flip = p_flip;
        c.mci_prior = mci_prior;
        return generate_cohort(c);
      },
      py::arg("seed") = 42, py::arg("schedule") = "34x7,1x5", py::arg("participants") = 35,
      py::arg("questions") = 18,
      py::arg("modalities") = std::vector<std::pair<std::string, std::size_t>>{{"synth", 32}},
      py::arg("informative_dims") = 8, py::arg("separation") = 0.5, py::arg("sigma_session") = 1.5,
      py::arg("sigma_response") = 0.5, py::arg("p_flip") = 0.1, py::arg("mci_prior") = 20.0 / 35.0,
      "Generate a synthetic cohort.");

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("groups", &Dataset::groups)
      .def_readonly("class_names", &Dataset::class_names)
      .def("__len__", &Dataset::size);

  m.def(
      "state_dataset",
      [](const CohortStore& c, const std::string& mode, const std::vector<std::string>& modalities,
         const std::string& history, double decay) {
        return to_dataset(build_state_dataset(c, parse_state_mode(mode), modalities, make_history(history, decay)));
      },
      py::arg("cohort"), py::arg("mode"), py::arg("modalities"), py::arg("history") = "mean",
      py::arg("decay") = 0.5, "One sample per session; mode is 'baseline' or 'historical'.");

  m.def(
      "change_dataset",
      [](const CohortStore& c, const std::vector<std::string>& modalities, const std::string& scheme) {
        return to_dataset(build_change_dataset(c, modalities, parse_pair_scheme(scheme)));
      },
      py::arg("cohort"), py::arg("modalities"), py::arg("pair_scheme") = "concat",
      "One sample per ordered session pair.");

  m.def(
      "compute_metrics",
      [](const std::vector<int>& pred, const std::vector<int>& labels, int n_classes) {
        return metrics_dict(compute_metrics(pred, labels, n_classes));
      },
      py::arg("predictions"), py::arg("labels"), py::arg("n_classes"));

  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(to_string(t.kind())); })
      .def_readonly("n_classes", &TrainedModel::n_classes)
      .def_readonly("dimension", &TrainedModel::dimension)
      .def("predict", [](const TrainedModel& t, const Matrix& x) { return predict_labels(t, x); }, py::arg("x"))
      .def("scores", [](const TrainedModel& t, const std::vector<double>& x) { return predict(t, x).scores; },
           py::arg("x"))
      .def("to_json", &model_to_json)
      .def_static("from_json", &model_from_json, py::arg("text"))
      .def("__eq__", [](const TrainedModel& a, const TrainedModel& b) { return a == b; });

  m.def(
      "train",
      [](const Matrix& x, const std::vector<int>& y, int n_classes, const std::string& learner, std::uint64_t seed,
         int trees, double svm_c, std::optional<double> svm_gamma, double lr, int epochs, int hidden,
         std::size_t threads) {
        const auto cfg = make_learner(learner, seed, trees, svm_c, svm_gamma, lr, epochs, hidden, threads);
        py::gil_scoped_release release;
        return train(cfg, x, y, n_classes);
      },
      py::arg("x"), py::arg("y"), py::arg("n_classes"), py::arg("learner") = "rf", py::arg("seed") = 0,
      py::arg("trees") = 100, py::arg("svm_c") = 1.0, py::arg("svm_gamma") = py::none(), py::arg("lr") = 0.1,
      py::arg("epochs") = 100, py::arg("hidden") = 64, py::arg("threads") = 0);

  m.def(
      "cross_validate",
      [](const Dataset& data, const std::string& learner, int folds, const std::string& strategy,
         const std::string& normalize, std::uint64_t seed, int trees, std::size_t threads, const std::string& method) {
        const auto cfg = make_learner(learner, seed, trees, 1.0, std::nullopt, 0.1, 100, 64, threads);
        const auto plan = make_folds(data, folds, parse_fold_strategy(strategy), seed);
        CrossValidateOptions opt;
        opt.normalize = parse_normalize_mode(normalize);
        opt.threads = threads;
        std::string json;
        {
          py::gil_scoped_release release;
          MetricsReport r = cross_validate(data, cfg, plan, opt);
          r.method = method;
          json = emit_report(r, ReportFormat::Json);
        }
        return json;
      },
      py::arg("dataset"), py::arg("learner") = "rf", py::arg("folds") = 10, py::arg("strategy") = "stratified",
      py::arg("normalize") = "per-fold", py::arg("seed") = 42, py::arg("trees") = 100, py::arg("threads") = 0,
      py::arg("method") = "experiment", "Returns the report as JSON text.");

  m.def(
      "render_report",
      [](const std::string& json) { return emit_report(report_from_json(json), ReportFormat::Markdown); },
      py::arg("json"));
  m.def(
      "render_comparison",
      [](const std::string& baseline, const std::string& proposed) {
        return emit_comparison(report_from_json(baseline), report_from_json(proposed));
      },
      py::arg("baseline"), py::arg("proposed"));
}
