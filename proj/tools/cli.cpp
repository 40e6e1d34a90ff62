#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "longicog/longicog.hpp"

namespace fs = std::filesystem;

namespace longicog::cli {

namespace {

ModalitySpec parse_modality_spec(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ValidationError("modality '" + text + "' must be NAME:DIMENSION");
  std::size_t used = 0;
  long dim = 0;
  try {
    dim = std::stol(text.substr(colon + 1), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() - colon - 1 || dim < 1) throw ValidationError("bad dimension in modality '" + text + "'");
  return {text.substr(0, colon), static_cast<std::size_t>(dim)};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LearnerFlags {
  std::string learner = "rf";
  int trees = 100;
  std::optional<std::size_t> max_features;
  bool no_bootstrap = false;
  int min_samples_split = 2;
  double svm_c = 1.0;
  std::optional<double> svm_gamma;
  double svm_tol = 1e-3;
  long svm_max_iter = 100000;
  double lr = 0.1;
  int epochs = 100;
  int batch_size = 16;
  int hidden = 64;

  void add(CLI::App* app) {
    app->add_option("--learner", learner, "tree|dt, forest|rf, svm, mlp|nn")->capture_default_str();
    app->add_option("--trees", trees, "forest size")->capture_default_str();
    app->add_option("--max-features", max_features, "features tried per split (default ceil(sqrt(d)))");
    app->add_flag("--no-bootstrap", no_bootstrap, "train every tree on the full training split");
    app->add_option("--min-samples-split", min_samples_split, "smallest node that may be split")
        ->capture_default_str();
    app->add_option("--svm-c", svm_c, "SVM penalty C")->capture_default_str();
    app->add_option("--svm-gamma", svm_gamma, "RBF gamma (default 1/(d*var(X)))");
    app->add_option("--svm-tol", svm_tol, "SMO stopping tolerance")->capture_default_str();
    app->add_option("--svm-max-iter", svm_max_iter, "SMO iteration cap")->capture_default_str();
    app->add_option("--lr", lr, "MLP Adam learning rate")->capture_default_str();
    app->add_option("--epochs", epochs, "MLP epochs")->capture_default_str();
    app->add_option("--batch-size", batch_size, "MLP mini-batch size")->capture_default_str();
    app->add_option("--hidden", hidden, "MLP hidden units")->capture_default_str();
  }

  LearnerConfig config(std::uint64_t seed, std::size_t threads) const {
    LearnerConfig c;
    c.kind = parse_learner_kind(learner);
    c.forest.n_trees = trees;
    c.forest.max_features = max_features;
    c.forest.bootstrap = !no_bootstrap;
    c.tree.min_samples_split = min_samples_split;
    c.svm.c = svm_c;
    c.svm.gamma = svm_gamma;
    c.svm.tol = svm_tol;
    c.svm.max_iter = svm_max_iter;
    c.mlp.learning_rate = lr;
    c.mlp.epochs = epochs;
    c.mlp.batch_size = batch_size;
    c.mlp.hidden = hidden;
    c.seed = seed;
    c.threads = threads;
    c.validate();
    return c;
  }
};

struct ExperimentFlags {
  std::string cohort;
  std::vector<std::string> modalities;
  int folds = 10;
  std::string strategy = "stratified";
  std::string normalize = "per-fold";
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  std::string out;
  std::string markdown;
  LearnerFlags learner;

  void add(CLI::App* app) {
    app->add_option("--cohort", cohort, "cohort directory")->required();
    app->add_option("--modality", modalities, "modality to use; repeat to fuse several (default: first declared)");
    app->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    app->add_option("--strategy", strategy, "stratified|grouped")->capture_default_str();
    app->add_option("--normalize", normalize, "per-fold|global|none")->capture_default_str();
    app->add_option("--seed", seed, "master seed for folds and learners")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0 = LONGICOG_THREADS or all cores)")
        ->capture_default_str();
    app->add_option("--out", out, "report JSON path (default COHORT/reports/<method>.json)");
    app->add_option("--markdown", markdown, "also write the markdown table here");
    learner.add(app);
  }

  std::vector<std::string> resolve_modalities(const CohortStore& store) const {
    if (!modalities.empty()) {
      for (const auto& m : modalities)
        if (!store.find_modality(m)) throw ValidationError("unknown modality '" + m + "'");
      return modalities;
    }
    if (store.modalities.empty()) throw ValidationError("cohort declares no modalities");
    return {store.modalities.front().name};
  }

  fs::path out_path(const std::string& method, const std::string& ext = ".json") const {
    if (!out.empty()) return out;
    return fs::path(cohort) / "reports" / (method + ext);
  }
};

MetricsReport run_experiment(const Dataset& data, const ExperimentFlags& f, const std::string& method,
                             const std::vector<std::string>& modalities, const std::string& scheme) {
  const LearnerConfig config = f.learner.config(f.seed, f.threads);
  const FoldPlan plan = make_folds(data, f.folds, parse_fold_strategy(f.strategy), f.seed);
  CrossValidateOptions options;
  options.normalize = parse_normalize_mode(f.normalize);
  options.threads = f.threads;
  MetricsReport report = cross_validate(data, config, plan, options);
  report.method = method;
  report.modalities = modalities;
  report.scheme = scheme;
  return report;
}

HistoryScheme history_scheme(const std::string& name, double decay) {
  if (name == "mean") return HistoryScheme::mean();
  if (name == "ewma") {
    if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("--decay must be in (0, 1]");
    return HistoryScheme::ewma(decay);
  }
  throw ValidationError("unknown history scheme '" + name + "' (expected mean|ewma)");
}

MetricsReport state_report(const CohortStore& store, const ExperimentFlags& f, StateMode mode,
                           const HistoryScheme& scheme) {
  const auto modalities = f.resolve_modalities(store);
  const auto samples = build_state_dataset(store, mode, modalities, scheme);
  const std::string method = "state-" + std::string(to_string(mode));
  return run_experiment(to_dataset(samples), f, method, modalities,
                        mode == StateMode::Historical ? scheme.name() : "none");
}

void emit(const MetricsReport& report, const ExperimentFlags& f, std::ostream& out) {
  const fs::path json_path = f.out_path(report.method);
  write_text(json_path, emit_report(report, ReportFormat::Json));
  const std::string md = emit_report(report, ReportFormat::Markdown);
  if (!f.markdown.empty()) write_text(f.markdown, md);
  out << md << "\nReport: " << json_path.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Longitudinal cognitive-state detection and change prediction"};
  app.name("longicog");
  app.set_config("--config", "", "TOML experiment file; [subcommand] sections, command-line flags win");
  app.require_subcommand(1);
  std::function<void()> action;

  // synth
  SynthConfig synth;
  std::string synth_out;
  std::string schedule = format_schedule(synth.schedule);
  std::vector<std::string> synth_modalities;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cohort directory");
  s->add_option("--out", synth_out, "output cohort directory")->required();
  s->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  s->add_option("--participants", synth.n_participants, "participant count")->capture_default_str();
  s->add_option("--schedule", schedule, "COUNTxSESSIONS list, e.g. 34x7,1x5")->capture_default_str();
  s->add_option("--questions", synth.n_questions, "responses per session")->capture_default_str();
  s->add_option("--modality", synth_modalities, "NAME:DIMENSION, repeatable (default synth:32)");
  s->add_option("--informative-dims", synth.informative_dims, "leading dimensions carrying the class shift")
      ->capture_default_str();
  s->add_option("--separation", synth.separation, "MCI mean shift on informative dimensions")
      ->capture_default_str();
  s->add_option("--sigma-session", synth.sigma_session, "per-session noise sd")->capture_default_str();
  s->add_option("--sigma-response", synth.sigma_response, "per-response noise sd")->capture_default_str();
  s->add_option("--p-flip", synth.p_flip, "state flip probability between sessions")->capture_default_str();
  s->add_option("--mci-prior", synth.mci_prior, "probability of starting MCI")->capture_default_str();
  s->add_option("--moca-mean-hc", synth.moca_mean_hc, "MoCA mean for HC sessions")->capture_default_str();
  s->add_option("--moca-mean-mci", synth.moca_mean_mci, "MoCA mean for MCI sessions")->capture_default_str();
  s->add_option("--moca-sd", synth.moca_sd, "MoCA sd")->capture_default_str();
  s->callback([&] {
    action = [&] {
      synth.schedule = parse_schedule(schedule);
      if (!synth_modalities.empty()) {
        synth.modalities.clear();
        for (const auto& m : synth_modalities) synth.modalities.push_back(parse_modality_spec(m));
      }
      const CohortStore store = generate_cohort(synth);
      save_cohort(store, synth_out);
      out << format_summary(describe_cohort(store)) << "Cohort: " << synth_out << "\n";
    };
  });

  // ingest
  std::string ingest_cohort;
  std::string ingest_modality;
  std::string ingest_file;
  auto* in = app.add_subcommand("ingest", "Attach a feature JSONL file to a cohort");
  in->add_option("--cohort", ingest_cohort, "cohort directory")->required();
  in->add_option("--modality", ingest_modality, "NAME:DIMENSION; declared if new")->required();
  in->add_option("--file", ingest_file, "feature records, one JSON object per line")->required();
  in->callback([&] {
    action = [&] {
      CohortStore store = load_cohort(ingest_cohort);
      const ModalitySpec spec = parse_modality_spec(ingest_modality);
      if (!store.find_modality(spec.name)) store.modalities.push_back(spec);
      const IngestResult result = ingest_features(ingest_file, spec, store);
      save_cohort(result.store, ingest_cohort);
      out << "ingested " << result.count << " record(s) into " << ingest_cohort << " (" << spec.name << ")\n";
    };
  });

  // validate
  std::string validate_cohort_dir;
  auto* va = app.add_subcommand("validate", "Check a cohort directory for consistency");
  va->add_option("--cohort", validate_cohort_dir, "cohort directory")->required();
  int validate_status = 0;
  va->callback([&] {
    action = [&] {
      const ValidationReport report = validate_cohort(load_cohort(validate_cohort_dir));
      for (const auto& f : report.findings) out << to_string(f.kind) << ": " << f.message << "\n";
      if (report.ok()) {
        out << "ok\n";
      } else {
        err << report.findings.size() << " finding(s)\n";
        validate_status = 1;
      }
    };
  });

  // describe
  std::string describe_dir;
  auto* de = app.add_subcommand("describe", "Summarize sessions, classes and transitions");
  de->add_option("--cohort", describe_dir, "cohort directory")->required();
  de->callback([&] { action = [&] { out << format_summary(describe_cohort(load_cohort(describe_dir))); }; });

  // detect
  ExperimentFlags detect_flags;
  std::string detect_mode = "historical";
  std::string history = "mean";
  double decay = 0.5;
  std::string export_path;
  auto* dt = app.add_subcommand("detect", "Cross-validate cognitive-state detection");
  detect_flags.add(dt);
  dt->add_option("--mode", detect_mode, "baseline|historical")->capture_default_str();
  dt->add_option("--history", history, "historical aggregation: mean|ewma")->capture_default_str();
  dt->add_option("--decay", decay, "ewma decay toward older sessions")->capture_default_str();
  dt->add_option("--export", export_path, "also write the built samples as JSONL");
  dt->callback([&] {
    action = [&] {
      const CohortStore store = load_cohort(detect_flags.cohort);
      const StateMode mode = parse_state_mode(detect_mode);
      const HistoryScheme scheme = history_scheme(history, decay);
      if (!export_path.empty())
        export_samples(build_state_dataset(store, mode, detect_flags.resolve_modalities(store), scheme), export_path);
      emit(state_report(store, detect_flags, mode, scheme), detect_flags, out);
    };
  });

  // change
  ExperimentFlags change_flags;
  std::string pair_scheme = "concat";
  std::string change_export;
  auto* ch = app.add_subcommand("change", "Cross-validate cognitive-change prediction over session pairs");
  change_flags.add(ch);
  ch->add_option("--pair-scheme", pair_scheme, "concat|concat+diff")->capture_default_str();
  ch->add_option("--export", change_export, "also write the built samples as JSONL");
  ch->callback([&] {
    action = [&] {
      const CohortStore store = load_cohort(change_flags.cohort);
      const auto modalities = change_flags.resolve_modalities(store);
      const PairScheme scheme = parse_pair_scheme(pair_scheme);
      const auto samples = build_change_dataset(store, modalities, scheme);
      if (!change_export.empty()) export_samples(samples, change_export);
      emit(run_experiment(to_dataset(samples), change_flags, "change", modalities, std::string(to_string(scheme))),
           change_flags, out);
    };
  });

  // compare
  ExperimentFlags compare_flags;
  std::string compare_history = "mean";
  double compare_decay = 0.5;
  auto* co = app.add_subcommand("compare", "Baseline vs historical detection side by side");
  compare_flags.add(co);
  co->add_option("--history", compare_history, "historical aggregation: mean|ewma")->capture_default_str();
  co->add_option("--decay", compare_decay, "ewma decay toward older sessions")->capture_default_str();
  co->callback([&] {
    action = [&] {
      const CohortStore store = load_cohort(compare_flags.cohort);
      const HistoryScheme scheme = history_scheme(compare_history, compare_decay);
      const MetricsReport base = state_report(store, compare_flags, StateMode::Baseline, scheme);
      const MetricsReport hist = state_report(store, compare_flags, StateMode::Historical, scheme);
      const fs::path json_path = compare_flags.out_path("compare");
      write_text(json_path, emit_comparison_json(base, hist));
      const std::string md = emit_comparison(base, hist);
      if (!compare_flags.markdown.empty()) write_text(compare_flags.markdown, md);
      out << md << "\nReport: " << json_path.string() << "\n";
    };
  });

  // report
  std::string report_in;
  std::string report_against;
  std::string report_out;
  auto* rp = app.add_subcommand("report", "Render a report JSON as markdown");
  rp->add_option("--input", report_in, "report JSON")->required();
  rp->add_option("--against", report_against, "second report; renders a comparison with --input as baseline");
  rp->add_option("--out", report_out, "write markdown here instead of stdout");
  rp->callback([&] {
    action = [&] {
      const MetricsReport a = report_from_json(read_text(report_in));
      const std::string md = report_against.empty()
                                 ? emit_report(a, ReportFormat::Markdown)
                                 : emit_comparison(a, report_from_json(read_text(report_against)));
      if (report_out.empty()) out << md;
      else write_text(report_out, md);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (action) action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return validate_status;
}

}  // namespace longicog::cli
