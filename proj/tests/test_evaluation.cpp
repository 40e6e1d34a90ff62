#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "longicog/evaluation.hpp"
#include "longicog/longitudinal.hpp"
#include "longicog/synth.hpp"
#include "metric_fixtures.hpp"
#include "oracles.hpp"

using namespace longicog;

namespace {

Dataset labeled(std::size_t n, int classes, std::size_t groups = 35) {
  Dataset ds;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(static_cast<int>((i * 7) % 11 < 5 ? 0 : (classes > 2 ? i % 3 : 1)));
    ds.groups.push_back("P" + std::to_string(i % groups));
  }
  return ds;
}

/// One informative column: the label itself plus a bounded offset.
Dataset separable(std::size_t n) {
  Dataset ds = oracle::blobs(static_cast<int>(n / 2), 2, 3, 0.0, 1.0, 5);
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
    ds.features(r, 1) = ds.labels[static_cast<std::size_t>(r)] * 10.0 + 0.01 * static_cast<double>(r % 7);
  return ds;
}

}  // namespace

TEST_CASE("243 samples in 10 stratified folds") {
  const auto ds = labeled(243, 2);
  const auto plan = make_folds(ds, 10, FoldStrategy::Stratified, 42);
  std::vector<std::size_t> sizes;
  for (int f = 0; f < 10; ++f) sizes.push_back(plan.test_rows(f).size());
  for (auto s : sizes) CHECK((s == 24 || s == 25));
  CHECK(std::count(sizes.begin(), sizes.end(), 25) == 3);
}

TEST_CASE("fold plans partition the samples") {
  for (auto strategy : {FoldStrategy::Stratified, FoldStrategy::Grouped}) {
    for (int k : {2, 5, 10}) {
      const auto ds = labeled(101, 3);
      const auto plan = make_folds(ds, k, strategy, 7);
      std::vector<int> seen(ds.size(), 0);
      for (int f = 0; f < k; ++f) {
        const auto test = plan.test_rows(f);
        const auto train = plan.train_rows(f);
        CHECK(test.size() + train.size() == ds.size());
        for (auto r : test) ++seen[r];
      }
      for (int s : seen) CHECK(s == 1);
    }
  }
}

TEST_CASE("k equal to the dataset size is leave-one-out") {
  const auto ds = labeled(12, 2);
  const auto plan = make_folds(ds, 12, FoldStrategy::Stratified, 1);
  for (int f = 0; f < 12; ++f) CHECK(plan.test_rows(f).size() == 1);
}

TEST_CASE("stratified folds keep class proportions within one sample") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = labeled(143, 3);
    const int k = 10;
    const auto plan = make_folds(ds, k, FoldStrategy::Stratified, seed);
    std::map<int, std::size_t> global;
    for (int y : ds.labels) ++global[y];
    for (int f = 0; f < k; ++f) {
      std::map<int, std::size_t> local;
      for (auto r : plan.test_rows(f)) ++local[ds.labels[r]];
      for (auto [c, n] : global) {
        const double expect = static_cast<double>(n) / k;
        CHECK(std::abs(static_cast<double>(local[c]) - expect) < 1.0);
      }
    }
  }
}

TEST_CASE("grouped folds keep each participant in one fold") {
  const auto store = generate_cohort(SynthConfig{});
  const auto ds = to_dataset(build_state_dataset(store, StateMode::Historical, {"synth"}, HistoryScheme::mean()));
  const auto plan = make_folds(ds, 10, FoldStrategy::Grouped, 3);
  std::map<std::string, std::set<int>> folds_of;
  for (std::size_t i = 0; i < ds.size(); ++i) folds_of[ds.groups[i]].insert(plan.assignment[i]);
  CHECK(folds_of.size() == 35);
  for (const auto& [p, fs] : folds_of) CHECK(fs.size() == 1);
  for (int f = 0; f < 10; ++f) CHECK(!plan.test_rows(f).empty());
}

TEST_CASE("make_folds preconditions") {
  CHECK_THROWS_AS(make_folds(labeled(5, 2), 10, FoldStrategy::Stratified, 0), ValidationError);
  CHECK_THROWS_AS(make_folds(labeled(50, 2), 1, FoldStrategy::Stratified, 0), ValidationError);
  CHECK_THROWS_AS(make_folds(labeled(50, 2, 4), 5, FoldStrategy::Grouped, 0), ValidationError);
}

TEST_CASE("fold plans are deterministic for a seed") {
  const auto ds = labeled(80, 2);
  CHECK(make_folds(ds, 10, FoldStrategy::Stratified, 3).assignment ==
        make_folds(ds, 10, FoldStrategy::Stratified, 3).assignment);
  CHECK(make_folds(ds, 10, FoldStrategy::Grouped, 3).assignment ==
        make_folds(ds, 10, FoldStrategy::Grouped, 3).assignment);
}

TEST_CASE("metric fixtures") {
  for (const auto& fx : fixtures::metric_fixtures()) {
    CAPTURE(fx.name);
    std::vector<int> pred;
    std::vector<int> lab;
    fixtures::expand(fx.confusion, pred, lab);
    const auto m = compute_metrics(pred, lab, static_cast<int>(fx.confusion.size()));
    CHECK(m.confusion == fx.confusion);
    CHECK(std::abs(m.accuracy - fx.accuracy) <= 1e-12);
    CHECK(std::abs(m.macro_precision - fx.macro_precision) <= 1e-12);
    CHECK(std::abs(m.macro_recall - fx.macro_recall) <= 1e-12);
    CHECK(std::abs(m.macro_f1 - fx.macro_f1) <= 1e-12);
  }
}

TEST_CASE("metrics are invariant under relabeling") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    std::vector<int> pred;
    std::vector<int> lab;
    for (int i = 0; i < 30; ++i) {
      pred.push_back(static_cast<int>(rng() % static_cast<unsigned>(k)));
      lab.push_back(static_cast<int>(rng() % static_cast<unsigned>(k)));
    }
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> pp;
    std::vector<int> ll;
    for (int v : pred) pp.push_back(perm[static_cast<std::size_t>(v)]);
    for (int v : lab) ll.push_back(perm[static_cast<std::size_t>(v)]);
    const auto a = compute_metrics(pred, lab, k);
    const auto b = compute_metrics(pp, ll, k);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    CHECK(a.macro_precision == doctest::Approx(b.macro_precision).epsilon(1e-12));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        CHECK(a.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
              b.confusion[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]
                         [static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])]);
    CHECK(a.accuracy >= 0.0);
    CHECK(a.macro_f1 <= 1.0);
  }
}

TEST_CASE("compute_metrics preconditions") {
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{0, 1}, std::vector<int>{0}, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{2}, std::vector<int>{0}, 2), ValidationError);
}

TEST_CASE("a perfectly separating feature gives perfect scores for every learner") {
  const auto ds = separable(60);
  for (auto kind : {LearnerKind::Tree, LearnerKind::Forest, LearnerKind::Svm, LearnerKind::Mlp}) {
    CAPTURE(to_string(kind));
    LearnerConfig cfg;
    cfg.kind = kind;
    cfg.forest.n_trees = 20;
    const auto plan = make_folds(ds, 5, FoldStrategy::Stratified, 1);
    const auto r = cross_validate(ds, cfg, plan);
    CHECK(r.pooled.accuracy == 1.0);
    CHECK(r.pooled.macro_f1 == 1.0);
  }
}

TEST_CASE("cross validation is deterministic and thread-count independent") {
  const auto ds = oracle::blobs(30, 3, 5, 1.0, 1.0, 6);
  LearnerConfig cfg;
  cfg.forest.n_trees = 15;
  cfg.seed = 4;
  const auto plan = make_folds(ds, 5, FoldStrategy::Stratified, 2);
  CrossValidateOptions one;
  one.threads = 1;
  CrossValidateOptions many;
  many.threads = 4;
  const auto a = emit_report(cross_validate(ds, cfg, plan, one), ReportFormat::Json);
  const auto b = emit_report(cross_validate(ds, cfg, plan, many), ReportFormat::Json);
  const auto c = emit_report(cross_validate(ds, cfg, plan, one), ReportFormat::Json);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("per-fold scalers only see training rows") {
  const auto ds = oracle::blobs(20, 2, 3, 1.0, 1.0, 7);
  const auto plan = make_folds(ds, 5, FoldStrategy::Stratified, 1);
  std::mutex mu;
  std::map<int, std::vector<std::size_t>> fitted;
  CrossValidateOptions opt;
  opt.scaler_probe = [&](int fold, std::span<const std::size_t> rows) {
    std::lock_guard lock(mu);
    fitted[fold].assign(rows.begin(), rows.end());
  };
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Tree;
  cross_validate(ds, cfg, plan, opt);
  REQUIRE(fitted.size() == 5);
  for (const auto& [fold, rows] : fitted) {
    const auto test = plan.test_rows(fold);
    const std::set<std::size_t> test_set(test.begin(), test.end());
    for (auto r : rows) CHECK(test_set.count(r) == 0);
    CHECK(rows.size() + test.size() == ds.size());
  }

  fitted.clear();
  opt.normalize = NormalizeMode::Global;
  cross_validate(ds, cfg, plan, opt);
  CHECK(fitted.size() == 1);
  CHECK(fitted.count(-1) == 1);
}

TEST_CASE("pooled accuracy is the size-weighted mean of fold accuracies") {
  const auto ds = oracle::blobs(23, 3, 4, 0.8, 1.0, 9);
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Tree;
  const auto r = cross_validate(ds, cfg, make_folds(ds, 7, FoldStrategy::Stratified, 2));
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& f : r.folds) {
    weighted += f.metrics.accuracy * static_cast<double>(f.test_size);
    n += f.test_size;
  }
  CHECK(n == ds.size());
  CHECK(r.pooled.accuracy == doctest::Approx(weighted / static_cast<double>(n)).epsilon(1e-12));
  CHECK(r.pooled.total == ds.size());
}

TEST_CASE("reports") {
  const auto ds = separable(40);
  LearnerConfig cfg;
  cfg.kind = LearnerKind::Tree;
  auto r = cross_validate(ds, cfg, make_folds(ds, 4, FoldStrategy::Stratified, 1));
  r.method = "state-historical";
  r.modalities = {"synth"};
  r.scheme = "mean";

  SUBCASE("perfect report renders 100.0 in every metric column") {
    const auto md = emit_report(r, ReportFormat::Markdown);
    CHECK(md.find("| state-historical | 100.0 | 100.0 | 100.0 | 100.0 |") != std::string::npos);
    CHECK(md.find("macro") != std::string::npos);
  }
  SUBCASE("json parse and re-emit is byte-identical") {
    const auto json = emit_report(r, ReportFormat::Json);
    const auto back = report_from_json(json);
    CHECK(emit_report(back, ReportFormat::Json) == json);
    CHECK(back.fingerprint() == r.fingerprint());
    CHECK(json.find("\"schema\": \"longicog-report/1\"") != std::string::npos);
  }
  SUBCASE("comparison delta is proposed minus baseline") {
    MetricsReport base = r;
    base.method = "state-baseline";
    base.pooled = metrics_from_confusion({{6, 4}, {2, 8}});
    const auto md = emit_comparison(base, r);
    CHECK(md.find("| Accuracy | 70.0 | 100.0 | +30.0 |") != std::string::npos);
    const auto json = nlohmann::ordered_json::parse(emit_comparison_json(base, r));
    CHECK(json["delta"]["accuracy"].get<double>() == doctest::Approx(0.3));
    CHECK(json["schema"] == "longicog-comparison/1");
  }
  SUBCASE("fingerprint tracks configuration") {
    MetricsReport other = r;
    other.learner.seed = 1234;
    CHECK(other.fingerprint() != r.fingerprint());
    CHECK(r.fingerprint().size() == 16);
  }
  SUBCASE("malformed report json") {
    CHECK_THROWS_AS(report_from_json("{}"), ParseError);
    CHECK_THROWS_AS(report_from_json("[1,"), ParseError);
  }
}
