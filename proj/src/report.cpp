#include <cstdio>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "longicog/evaluation.hpp"

namespace longicog {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kReportSchema = "longicog-report/1";

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string signed_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", 100.0 * v);
  return buf;
}

ojson metrics_json(const Metrics& m, const std::vector<std::string>& classes) {
  ojson j;
  j["accuracy"] = m.accuracy;
  j["macro_precision"] = m.macro_precision;
  j["macro_recall"] = m.macro_recall;
  j["macro_f1"] = m.macro_f1;
  j["total"] = m.total;
  ojson per = ojson::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c)
    per.push_back({{"class", c < classes.size() ? classes[c] : std::to_string(c)},
                   {"precision", m.per_class[c].precision},
                   {"recall", m.per_class[c].recall},
                   {"f1", m.per_class[c].f1},
                   {"support", m.per_class[c].support}});
  j["per_class"] = std::move(per);
  j["confusion"] = m.confusion;
  return j;
}

Metrics json_metrics(const ojson& j) {
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.macro_precision = j.at("macro_precision").get<double>();
  m.macro_recall = j.at("macro_recall").get<double>();
  m.macro_f1 = j.at("macro_f1").get<double>();
  m.total = j.at("total").get<std::size_t>();
  for (const auto& c : j.at("per_class"))
    m.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>(),
                           c.at("support").get<std::size_t>()});
  m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  return m;
}

ojson config_json(const MetricsReport& r) {
  ojson c;
  c["method"] = r.method;
  c["modalities"] = r.modalities;
  c["scheme"] = r.scheme;
  c["learner"] = ojson::parse(learner_config_to_json(r.learner));
  c["folds"] = r.k;
  c["strategy"] = std::string(to_string(r.strategy));
  c["normalize"] = std::string(to_string(r.normalize));
  c["seed"] = r.seed;
  c["n_samples"] = r.n_samples;
  c["dimension"] = r.dimension;
  return c;
}

ojson report_json(const MetricsReport& r) {
  ojson j;
  j["schema"] = kReportSchema;
  j["fingerprint"] = r.fingerprint();
  j["averaging"] = "macro";
  j["config"] = config_json(r);
  j["classes"] = r.class_names;
  j["pooled"] = metrics_json(r.pooled, r.class_names);
  j["fold_mean"] = metrics_json(r.fold_mean, r.class_names);
  ojson folds = ojson::array();
  for (const auto& f : r.folds)
    folds.push_back({{"fold", f.fold},
                     {"train_size", f.train_size},
                     {"test_size", f.test_size},
                     {"metrics", metrics_json(f.metrics, r.class_names)}});
  j["folds"] = std::move(folds);
  return j;
}

std::string learner_label(const MetricsReport& r) { return std::string(to_string(r.learner.kind)); }

void metric_header(std::ostringstream& os, const MetricsReport& r) {
  os << "Learner: " << learner_label(r) << ". Averaging: macro. Folds: " << r.k << " (" << to_string(r.strategy)
     << "), normalization: " << to_string(r.normalize) << ". Samples: " << r.n_samples
     << ", dimension: " << r.dimension << ". Seed: " << r.seed << ".\n\n";
}

}  // namespace

std::string MetricsReport::fingerprint() const {
  const std::string canonical = config_json(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string emit_report(const MetricsReport& r, ReportFormat format) {
  if (format == ReportFormat::Json) return report_json(r).dump(2) + "\n";

  std::ostringstream os;
  os << "## " << r.method << "\n\n";
  metric_header(os, r);
  os << "| Method | Accuracy | Precision | Recall | F1 |\n";
  os << "|---|---|---|---|---|\n";
  os << "| " << r.method << " | " << pct(r.pooled.accuracy) << " | " << pct(r.pooled.macro_precision) << " | "
     << pct(r.pooled.macro_recall) << " | " << pct(r.pooled.macro_f1) << " |\n";
  os << "| " << r.method << " (fold mean) | " << pct(r.fold_mean.accuracy) << " | "
     << pct(r.fold_mean.macro_precision) << " | " << pct(r.fold_mean.macro_recall) << " | "
     << pct(r.fold_mean.macro_f1) << " |\n\n";

  os << "Confusion matrix (rows true, columns predicted):\n\n|  |";
  for (const auto& c : r.class_names) os << " " << c << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < r.class_names.size(); ++i) os << "---|";
  os << "\n";
  for (std::size_t i = 0; i < r.pooled.confusion.size(); ++i) {
    os << "| " << (i < r.class_names.size() ? r.class_names[i] : std::to_string(i)) << " |";
    for (auto v : r.pooled.confusion[i]) os << " " << v << " |";
    os << "\n";
  }
  os << "\nFingerprint: `" << r.fingerprint() << "`\n";
  return os.str();
}

MetricsReport report_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<report>", 0, e.what());
  }
  try {
    if (j.value("schema", std::string()) != kReportSchema)
      throw ParseError("<report>", 0, std::string("expected schema '") + kReportSchema + "'");
    MetricsReport r;
    const auto& c = j.at("config");
    r.method = c.at("method").get<std::string>();
    r.modalities = c.at("modalities").get<std::vector<std::string>>();
    r.scheme = c.at("scheme").get<std::string>();
    r.learner = learner_config_from_json(c.at("learner").dump());
    r.k = c.at("folds").get<int>();
    r.strategy = parse_fold_strategy(c.at("strategy").get<std::string>());
    r.normalize = parse_normalize_mode(c.at("normalize").get<std::string>());
    r.seed = c.at("seed").get<std::uint64_t>();
    r.n_samples = c.at("n_samples").get<std::size_t>();
    r.dimension = c.at("dimension").get<std::size_t>();
    r.class_names = j.at("classes").get<std::vector<std::string>>();
    r.pooled = json_metrics(j.at("pooled"));
    r.fold_mean = json_metrics(j.at("fold_mean"));
    for (const auto& f : j.at("folds"))
      r.folds.push_back({f.at("fold").get<int>(), f.at("train_size").get<std::size_t>(),
                         f.at("test_size").get<std::size_t>(), json_metrics(f.at("metrics"))});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<report>", 0, e.what());
  }
}

std::string emit_comparison(const MetricsReport& baseline, const MetricsReport& proposed) {
  std::ostringstream os;
  os << "## " << baseline.method << " vs " << proposed.method << "\n\n";
  metric_header(os, proposed);
  os << "| Metric | " << baseline.method << " | " << proposed.method << " | Delta |\n";
  os << "|---|---|---|---|\n";
  const struct {
    const char* name;
    double Metrics::*field;
  } rows[] = {{"Accuracy", &Metrics::accuracy},
              {"Precision", &Metrics::macro_precision},
              {"Recall", &Metrics::macro_recall},
              {"F1", &Metrics::macro_f1}};
  for (const auto& row : rows) {
    const double b = baseline.pooled.*row.field;
    const double p = proposed.pooled.*row.field;
    os << "| " << row.name << " | " << pct(b) << " | " << pct(p) << " | " << signed_pct(p - b) << " |\n";
  }
  os << "\nFingerprints: " << baseline.method << " `" << baseline.fingerprint() << "`, " << proposed.method << " `"
     << proposed.fingerprint() << "`\n";
  return os.str();
}

std::string emit_comparison_json(const MetricsReport& baseline, const MetricsReport& proposed) {
  ojson j;
  j["schema"] = "longicog-comparison/1";
  j["baseline"] = report_json(baseline);
  j["proposed"] = report_json(proposed);
  j["delta"] = {{"accuracy", proposed.pooled.accuracy - baseline.pooled.accuracy},
                {"macro_precision", proposed.pooled.macro_precision - baseline.pooled.macro_precision},
                {"macro_recall", proposed.pooled.macro_recall - baseline.pooled.macro_recall},
                {"macro_f1", proposed.pooled.macro_f1 - baseline.pooled.macro_f1}};
  return j.dump(2) + "\n";
}

}  // namespace longicog
