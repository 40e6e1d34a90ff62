// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "longicog/longicog.hpp"
#include "metric_fixtures.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace longicog;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kShapeBudgetSeconds = 1.0;
constexpr double kDirectionalMargin = 0.05;
constexpr double kDirectionalBudgetSeconds = 120.0;
constexpr double kChangeMargin = 0.10;
constexpr double kChangeFlip = 0.15;
constexpr double kChangeBudgetSeconds = 120.0;
constexpr double kSmoTolerance = 1e-3;
constexpr double kGradientTolerance = 1e-4;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr double kMetricTolerance = 1e-12;

int failures = 0;

void verdict(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

/// Macro-F1 of always predicting the most frequent class (lowest index on ties).
double majority_macro_f1(const Dataset& ds) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.n_classes()), 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const std::vector<int> pred(ds.size(), majority);
  return compute_metrics(pred, ds.labels, ds.n_classes()).macro_f1;
}

MetricsReport m1_run(const CohortStore& store, StateMode mode, const CrossValidateOptions& opt = {}) {
  const auto ds = to_dataset(build_state_dataset(store, mode, {"synth"}, HistoryScheme::mean()));
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Forest;
  cfg.seed = 42;
  return cross_validate(ds, cfg, make_folds(ds, 10, FoldStrategy::Stratified, 42), opt);
}

void shape_exactness() {
  const auto t0 = Clock::now();
  const auto store = generate_cohort(SynthConfig{});
  const auto state = build_state_dataset(store, StateMode::Historical, {"synth"});
  const auto change = build_change_dataset(store, {"synth"});
  const double secs = seconds_since(t0);
  verdict("dataset-shape", state.size() == 243 && change.size() == 1448 && secs < kShapeBudgetSeconds,
          std::to_string(state.size()) + " state samples (expect 243), " + std::to_string(change.size()) +
              " change samples (expect 1448), " + fmt("%.3fs", secs));
}

void directional_m1(const CohortStore& store) {
  const auto t0 = Clock::now();
  const auto base = m1_run(store, StateMode::Baseline);
  const auto hist = m1_run(store, StateMode::Historical);
  const double secs = seconds_since(t0);
  const double delta = hist.pooled.macro_f1 - base.pooled.macro_f1;
  verdict("directional-m1", delta >= kDirectionalMargin && secs < kDirectionalBudgetSeconds,
          fmt("baseline macro-F1 %.4f, historical %.4f, delta %+.4f (need >= %.2f), ", base.pooled.macro_f1,
              hist.pooled.macro_f1, delta, kDirectionalMargin) +
              fmt("%.1fs", secs));
}

void change_learnability() {
  const auto t0 = Clock::now();
  SynthConfig sc;
  sc.p_flip = kChangeFlip;
  const auto store = generate_cohort(sc);
  const auto ds = to_dataset(build_change_dataset(store, {"synth"}, PairScheme::Concat));
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Forest;
  cfg.seed = 42;
  const auto r = cross_validate(ds, cfg, make_folds(ds, 10, FoldStrategy::Stratified, 42));
  const double majority = majority_macro_f1(ds);
  const double secs = seconds_since(t0);
  verdict("m2-learnability", r.pooled.macro_f1 - majority >= kChangeMargin && secs < kChangeBudgetSeconds,
          fmt("change macro-F1 %.4f vs majority-class %.4f, margin %+.4f (need >= %.2f), ", r.pooled.macro_f1,
              majority, r.pooled.macro_f1 - majority, kChangeMargin) +
              fmt("%.1fs", secs));
}

void label_map_totality() {
  using S = CognitiveState;
  const bool table = change_label(S::HC, S::HC) == ChangeLabel::NoChange &&
                     change_label(S::MCI, S::MCI) == ChangeLabel::NoChange &&
                     change_label(S::MCI, S::HC) == ChangeLabel::Improved &&
                     change_label(S::HC, S::MCI) == ChangeLabel::Decline;
  bool counts = true;
  for (int n = 0; n <= 10; ++n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 1);
    const auto pairs = enumerate_pairs(idx);
    std::set<std::pair<int, int>> unique(pairs.begin(), pairs.end());
    bool ok = pairs.size() == static_cast<std::size_t>(n * (n - 1)) && unique.size() == pairs.size();
    for (auto [x, y] : pairs) ok = ok && x != y;
    counts = counts && ok;
  }
  verdict("label-map-totality", table && counts,
          std::string("4 state pairs ") + (table ? "match" : "MISMATCH") + ", n(n-1) pair counts for n in [0,10] " +
              (counts ? "hold" : "FAIL"));
}

void learner_oracles() {
  const auto t0 = Clock::now();

  // (a) trees vs exhaustive split search
  std::mt19937_64 rng(2024);
  int tree_cases = 0;
  int tree_bad = 0;
  for (int n = 1; n <= 32; ++n) {
    for (int d = 1; d <= 4; ++d) {
      for (int rep = 0; rep < 6; ++rep, ++tree_cases) {
        const int classes = 2 + rep % 2;
        const int levels = 2 + rep;
        Matrix x(n, d);
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < d; ++j) x(i, j) = static_cast<double>(rng() % static_cast<unsigned>(levels));
          y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(classes));
        }
        std::vector<std::size_t> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::vector<std::size_t> feats(static_cast<std::size_t>(d));
        std::iota(feats.begin(), feats.end(), std::size_t{0});
        const auto split = best_split(x, y, rows, feats, classes);
        const double expect = oracle::exhaustive_min_split_impurity(x, y);
        bool ok = expect < 0 ? !split.has_value()
                             : split.has_value() && std::abs(split->weighted_impurity - expect) <= 1e-12;
        const auto tree = fit_tree(x, y, rows, classes, TreeParams{}, 0, nullptr);
        int correct = 0;
        for (int i = 0; i < n; ++i)
          correct += argmax(tree.predict_proba(std::span<const double>(x.row(i).data(), static_cast<std::size_t>(d)))) ==
                     y[static_cast<std::size_t>(i)];
        ok = ok && std::abs(static_cast<double>(correct) / n - oracle::max_achievable_accuracy(x, y)) < 1e-12;
        tree_bad += !ok;
      }
    }
  }

  // (b) SMO vs projected-gradient dual maximization
  int smo_cases = 0;
  double smo_worst = 0.0;
  std::normal_distribution<double> z(0.0, 1.0);
  for (int n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 10; ++rep, ++smo_cases) {
      Matrix x(n, 2);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
      std::vector<int> y(static_cast<std::size_t>(n));
      for (auto& v : y) v = rng() % 2 ? 1 : -1;
      y[0] = 1;
      y[1] = -1;
      const double c = rep % 3 == 0 ? 0.1 : (rep % 3 == 1 ? 1.0 : 10.0);
      const double gamma = 0.5;
      Matrix k(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      const auto r = smo_solve(k, y, c, 1e-6);
      const double gap = std::abs(svm_dual_objective(k, y, r.alpha) - oracle::brute_force_dual(k, y, c, 20000));
      smo_worst = std::max(smo_worst, gap);
    }
  }

  // (c) MLP gradients vs central differences
  double grad_worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 g(5000 + s);
    const auto d = static_cast<Eigen::Index>(1 + g() % 8);
    const int h = 1 + static_cast<int>(g() % 12);
    const int k = 2 + static_cast<int>(g() % 2);
    const auto n = static_cast<Eigen::Index>(1 + g() % 10);
    const auto m = oracle::random_mlp(static_cast<std::size_t>(d), h, k, g);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(g);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(g() % static_cast<unsigned>(k));
    grad_worst = std::max(grad_worst, oracle::finite_difference_check(m, x, y).max());
  }
  const double secs = seconds_since(t0);

  verdict("learner-oracle-tree", tree_bad == 0,
          std::to_string(tree_cases - tree_bad) + "/" + std::to_string(tree_cases) +
              " generated datasets (<=32 points x <=4 dims) match exhaustive split search and best achievable accuracy");
  verdict("learner-oracle-smo", smo_worst <= kSmoTolerance,
          std::to_string(smo_cases) + " problems with <=6 points, worst dual gap " + fmt("%.2e (tol %.0e)", smo_worst, kSmoTolerance));
  verdict("learner-oracle-mlp", grad_worst <= kGradientTolerance,
          fmt("20 configurations, worst per-layer relative error %.2e (tol %.0e)", grad_worst, kGradientTolerance));
  verdict("learner-oracle-runtime", secs < kOracleBudgetSeconds, fmt("%.1fs (budget %.0fs)", secs, kOracleBudgetSeconds));
}

void metric_oracle() {
  int ok = 0;
  double worst = 0.0;
  for (const auto& fx : fixtures::metric_fixtures()) {
    std::vector<int> pred;
    std::vector<int> lab;
    fixtures::expand(fx.confusion, pred, lab);
    const auto m = compute_metrics(pred, lab, static_cast<int>(fx.confusion.size()));
    const double err = std::max({std::abs(m.accuracy - fx.accuracy), std::abs(m.macro_precision - fx.macro_precision),
                                 std::abs(m.macro_recall - fx.macro_recall), std::abs(m.macro_f1 - fx.macro_f1)});
    worst = std::max(worst, err);
    ok += err <= kMetricTolerance && m.confusion == fx.confusion;
  }
  const auto n = static_cast<int>(fixtures::metric_fixtures().size());
  verdict("metric-oracle", ok == n && n == 10,
          std::to_string(ok) + "/" + std::to_string(n) + " fixtures, worst error " + fmt("%.1e", worst));
}

void leakage_guards(const CohortStore& store) {
  const auto ds = to_dataset(build_state_dataset(store, StateMode::Historical, {"synth"}, HistoryScheme::mean()));
  const auto plan = make_folds(ds, 10, FoldStrategy::Stratified, 42);
  std::mutex mu;
  std::size_t leaked = 0;
  std::size_t probes = 0;
  CrossValidateOptions opt;
  opt.scaler_probe = [&](int fold, std::span<const std::size_t> rows) {
    std::lock_guard lock(mu);
    ++probes;
    for (auto r : rows) leaked += plan.assignment[r] == fold;
  };
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Forest;
  cfg.forest.n_trees = 10;
  cross_validate(ds, cfg, plan, opt);
  verdict("leakage-scaler", probes == 10 && leaked == 0,
          std::to_string(probes) + " per-fold scaler fits observed, " + std::to_string(leaked) + " test rows read");

  const auto grouped = make_folds(ds, 10, FoldStrategy::Grouped, 42);
  std::map<std::string, std::set<int>> folds_of;
  for (std::size_t i = 0; i < ds.size(); ++i) folds_of[ds.groups[i]].insert(grouped.assignment[i]);
  std::size_t split = 0;
  for (const auto& [p, f] : folds_of) split += f.size() > 1;
  verdict("leakage-grouped", split == 0 && folds_of.size() == 35,
          std::to_string(folds_of.size()) + " participants, " + std::to_string(split) + " appear in more than one fold");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const CohortStore& store) {
  testing::TempDir dir("acceptance");
  const auto cohort = (dir.path() / "cohort").string();
  std::ostringstream sink;
  bool ok = cli::run({"synth", "--out", cohort, "--seed", "42"}, sink, sink) == 0;
  std::string payload[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = (dir.path() / ("run" + std::to_string(i) + ".json")).string();
    ok = ok && cli::run({"detect", "--cohort", cohort, "--mode", "historical", "--learner", "rf", "--seed", "42",
                         "--out", out},
                        sink, sink) == 0;
    payload[i] = slurp(out);
  }
  verdict("determinism-cli", ok && !payload[0].empty() && payload[0] == payload[1],
          std::string("two detect invocations ") + (payload[0] == payload[1] ? "byte-identical" : "DIFFER") + " (" +
              std::to_string(payload[0].size()) + " bytes)");

  const auto ds = to_dataset(build_state_dataset(store, StateMode::Historical, {"synth"}, HistoryScheme::mean()));
  const auto seq = fit_forest(ds.features, ds.labels, 2, ForestParams{}, TreeParams{}, 42, 1);
  const auto par = fit_forest(ds.features, ds.labels, 2, ForestParams{}, TreeParams{}, 42, 8);
  verdict("determinism-forest", seq == par,
          std::string("100-tree forest with 1 vs 8 threads ") + (seq == par ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  try {
    const auto store = generate_cohort(SynthConfig{});
    shape_exactness();
    directional_m1(store);
    change_learnability();
    label_map_totality();
    learner_oracles();
    metric_oracle();
    leakage_guards(store);
    determinism(store);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance-harness: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion line(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
