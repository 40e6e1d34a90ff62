#include "longicog/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "longicog/features.hpp"
#include "longicog/parallel.hpp"

namespace longicog {

std::string_view to_string(FoldStrategy s) { return s == FoldStrategy::Stratified ? "stratified" : "grouped"; }

FoldStrategy parse_fold_strategy(std::string_view s) {
  if (s == "stratified") return FoldStrategy::Stratified;
  if (s == "grouped" || s == "participant") return FoldStrategy::Grouped;
  throw ValidationError("unknown fold strategy '" + std::string(s) + "' (expected stratified|grouped)");
}

std::string_view to_string(NormalizeMode m) {
  switch (m) {
    case NormalizeMode::PerFold: return "per-fold";
    case NormalizeMode::Global: return "global";
    case NormalizeMode::None: return "none";
  }
  return "?";
}

NormalizeMode parse_normalize_mode(std::string_view s) {
  if (s == "per-fold") return NormalizeMode::PerFold;
  if (s == "global") return NormalizeMode::Global;
  if (s == "none") return NormalizeMode::None;
  throw ValidationError("unknown normalization '" + std::string(s) + "' (expected per-fold|global|none)");
}

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) rows.push_back(i);
  return rows;
}

FoldPlan make_folds(const Dataset& data, int k, FoldStrategy strategy, std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be >= 2");
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(k))
    throw ValidationError("dataset has " + std::to_string(n) + " samples, fewer than " + std::to_string(k) + " folds");

  FoldPlan plan;
  plan.k = k;
  plan.strategy = strategy;
  plan.seed = seed;
  plan.assignment.assign(n, -1);
  std::mt19937_64 rng(seed);

  if (strategy == FoldStrategy::Stratified) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);
    std::size_t next = 0;
    for (auto& [label, rows] : by_class) {
      std::shuffle(rows.begin(), rows.end(), rng);
      for (auto r : rows) plan.assignment[r] = static_cast<int>(next++ % static_cast<std::size_t>(k));
    }
    return plan;
  }

  if (data.groups.size() != n) throw ValidationError("grouped folds need a participant id per sample");
  std::map<std::string, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < n; ++i) by_group[data.groups[i]].push_back(i);
  if (by_group.size() < static_cast<std::size_t>(k))
    throw ValidationError("grouped folds need at least " + std::to_string(k) + " participants, have " +
                          std::to_string(by_group.size()));
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [id, rows] : by_group) groups.push_back(&rows);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::stable_sort(groups.begin(), groups.end(), [](auto* a, auto* b) { return a->size() > b->size(); });
  std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
  for (const auto* rows : groups) {
    const auto fold = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    for (auto r : *rows) plan.assignment[r] = static_cast<int>(fold);
    load[fold] += rows->size();
  }
  return plan;
}

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
  Metrics m;
  m.confusion = confusion;
  const std::size_t k = confusion.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) throw ValidationError("confusion matrix must be square");
    correct += confusion[i][i];
    for (auto c : confusion[i]) m.total += c;
  }
  m.accuracy = m.total ? static_cast<double>(correct) / static_cast<double>(m.total) : 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t i = 0; i < k; ++i) {
      predicted += confusion[i][c];
      actual += confusion[c][i];
    }
    const auto tp = static_cast<double>(confusion[c][c]);
    ClassScores s;
    s.support = actual;
    s.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    s.recall = actual ? tp / static_cast<double>(actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    m.per_class.push_back(s);
    m.macro_precision += s.precision;
    m.macro_recall += s.recall;
    m.macro_f1 += s.f1;
  }
  if (k > 0) {
    m.macro_precision /= static_cast<double>(k);
    m.macro_recall /= static_cast<double>(k);
    m.macro_f1 /= static_cast<double>(k);
  }
  return m;
}

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels, int n_classes) {
  if (predictions.size() != labels.size())
    throw ValidationError("predictions (" + std::to_string(predictions.size()) + ") and labels (" +
                          std::to_string(labels.size()) + ") differ in length");
  if (labels.empty()) throw ValidationError("cannot score zero predictions");
  if (n_classes < 1) throw ValidationError("n_classes must be positive");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 || predictions[i] >= n_classes)
      throw ValidationError("class index outside [0, n_classes)");
    ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  }
  return metrics_from_confusion(confusion);
}

MetricsReport cross_validate(const Dataset& data, const LearnerConfig& config, const FoldPlan& plan,
                             const CrossValidateOptions& options) {
  if (plan.assignment.size() != data.size())
    throw ValidationError("fold plan covers " + std::to_string(plan.assignment.size()) + " samples, dataset has " +
                          std::to_string(data.size()));
  config.validate();

  MetricsReport report;
  report.class_names = data.class_names;
  report.learner = config;
  report.strategy = plan.strategy;
  report.k = plan.k;
  report.normalize = options.normalize;
  report.seed = config.seed;
  report.n_samples = data.size();
  report.dimension = data.dimension();

  auto rows_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> out;
    out.reserve(idx.size());
    for (auto r : idx) {
      const auto row = data.features.row(static_cast<Eigen::Index>(r));
      out.emplace_back(row.data(), row.data() + row.size());
    }
    return out;
  };

  std::optional<MinMaxScaler> global_scaler;
  if (options.normalize == NormalizeMode::Global) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (options.scaler_probe) options.scaler_probe(-1, all);
    global_scaler = fit_minmax(rows_of(all));
  }

  const auto k = static_cast<std::size_t>(plan.k);
  const std::size_t fold_threads = std::min(resolve_threads(options.threads), k);
  std::vector<FoldResult> results(k);
  std::vector<std::vector<int>> fold_predictions(k);
  parallel_for(k, fold_threads, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto train_idx = plan.train_rows(fold);
    const auto test_idx = plan.test_rows(fold);
    if (test_idx.empty()) throw ValidationError("fold " + std::to_string(fold) + " has no test samples");
    try {
      Dataset train_set = data.subset(train_idx);
      Dataset test_set = data.subset(test_idx);
      std::optional<MinMaxScaler> scaler = global_scaler;
      if (options.normalize == NormalizeMode::PerFold) {
        if (options.scaler_probe) options.scaler_probe(fold, train_idx);
        scaler = fit_minmax(rows_of(train_idx));
      }
      if (scaler) {
        for (Matrix* m : {&train_set.features, &test_set.features})
          for (Eigen::Index r = 0; r < m->rows(); ++r)
            scaler->apply_inplace(std::span<double>(m->row(r).data(), static_cast<std::size_t>(m->cols())));
      }
      LearnerConfig fold_config = config;
      fold_config.seed = derive_seed(config.seed, f);
      fold_config.threads = fold_threads > 1 ? 1 : config.threads;
      const TrainedModel model = train(fold_config, train_set);
      const std::vector<int> predicted = predict_labels(model, test_set.features);
      results[f].fold = fold;
      results[f].train_size = train_idx.size();
      results[f].test_size = test_idx.size();
      results[f].metrics = compute_metrics(predicted, test_set.labels, data.n_classes());
      fold_predictions[f] = predicted;
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(fold) + ": " + e.what());
    }
  });

  const auto nc = static_cast<std::size_t>(data.n_classes());
  std::vector<std::vector<std::size_t>> pooled(nc, std::vector<std::size_t>(nc, 0));
  for (const auto& r : results)
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < nc; ++j) pooled[i][j] += r.metrics.confusion[i][j];
  report.pooled = metrics_from_confusion(pooled);

  Metrics& mean = report.fold_mean;
  mean.per_class.assign(nc, ClassScores{});
  for (const auto& r : results) {
    mean.accuracy += r.metrics.accuracy;
    mean.macro_precision += r.metrics.macro_precision;
    mean.macro_recall += r.metrics.macro_recall;
    mean.macro_f1 += r.metrics.macro_f1;
    mean.total += r.metrics.total;
    for (std::size_t c = 0; c < nc; ++c) {
      mean.per_class[c].precision += r.metrics.per_class[c].precision;
      mean.per_class[c].recall += r.metrics.per_class[c].recall;
      mean.per_class[c].f1 += r.metrics.per_class[c].f1;
      mean.per_class[c].support += r.metrics.per_class[c].support;
    }
  }
  const auto kd = static_cast<double>(k);
  mean.accuracy /= kd;
  mean.macro_precision /= kd;
  mean.macro_recall /= kd;
  mean.macro_f1 /= kd;
  for (auto& c : mean.per_class) {
    c.precision /= kd;
    c.recall /= kd;
    c.f1 /= kd;
  }
  report.folds = std::move(results);
  return report;
}

}  // namespace longicog
