#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "longicog/dataset.hpp"
#include "longicog/learners.hpp"

namespace longicog {

enum class FoldStrategy { Stratified, Grouped };
std::string_view to_string(FoldStrategy s);
FoldStrategy parse_fold_strategy(std::string_view s);

enum class NormalizeMode { PerFold, Global, None };
std::string_view to_string(NormalizeMode m);
NormalizeMode parse_normalize_mode(std::string_view s);

struct FoldPlan {
  int k = 10;
  FoldStrategy strategy = FoldStrategy::Stratified;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // sample index -> fold id

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

/// Stratified: each class is shuffled and dealt round-robin across folds, so
/// per-fold class counts and fold sizes differ by at most one. Grouped: whole
/// participants are assigned to folds, largest first, to the currently
/// smallest fold.
FoldPlan make_folds(const Dataset& data, int k, FoldStrategy strategy, std::uint64_t seed);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
};

/// A class with no true and no predicted samples scores 0 and still counts
/// toward the macro mean. Undefined ratios (0/0) are 0.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels, int n_classes);
Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

struct FoldResult {
  int fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  Metrics metrics;
};

struct MetricsReport {
  std::string method;  // e.g. "state-historical"
  std::vector<std::string> class_names;
  LearnerConfig learner;
  FoldStrategy strategy = FoldStrategy::Stratified;
  int k = 10;
  NormalizeMode normalize = NormalizeMode::PerFold;
  std::uint64_t seed = 0;
  std::vector<std::string> modalities;
  std::string scheme;  // history or pair scheme
  std::size_t n_samples = 0;
  std::size_t dimension = 0;
  Metrics pooled;                 // from the summed cross-fold confusion matrix
  Metrics fold_mean;              // unweighted mean of per-fold scores (confusion left empty)
  std::vector<FoldResult> folds;

  /// FNV-1a over the canonical configuration JSON.
  std::string fingerprint() const;
};

/// Called once per fold with the rows the scaler was fitted on.
using ScalerProbe = std::function<void(int fold, std::span<const std::size_t> rows)>;

struct CrossValidateOptions {
  NormalizeMode normalize = NormalizeMode::PerFold;
  std::size_t threads = 0;
  ScalerProbe scaler_probe;
};

MetricsReport cross_validate(const Dataset& data, const LearnerConfig& config, const FoldPlan& plan,
                             const CrossValidateOptions& options = {});

enum class ReportFormat { Json, Markdown };

/// JSON (`longicog-report/1`, fixed key order) or a markdown table.
std::string emit_report(const MetricsReport& report, ReportFormat format);
MetricsReport report_from_json(const std::string& text);

/// Markdown table with baseline, proposed, and delta (proposed - baseline)
/// columns per metric, in percent.
std::string emit_comparison(const MetricsReport& baseline, const MetricsReport& proposed);
/// JSON document holding both reports and the per-metric deltas.
std::string emit_comparison_json(const MetricsReport& baseline, const MetricsReport& proposed);

}  // namespace longicog
