#include <algorithm>
#include <fstream>
#include <random>

#include "doctest.h"
#include "longicog/features.hpp"
#include "test_support.hpp"

using namespace longicog;
using longicog::testing::TempDir;
using longicog::testing::random_vector;

namespace {

CohortStore one_session_store() {
  CohortStore store;
  store.modalities.push_back({"egemaps", 88});
  store.participants.push_back({"P07", std::nullopt, std::nullopt, {3}});
  store.sessions.push_back({"P07", 3, 28, CognitiveState::HC, {}});
  return store;
}

std::vector<FeatureRecord> records_for(const std::string& pid, int session, int count, std::size_t dim) {
  std::vector<FeatureRecord> out;
  for (int q = 1; q <= count; ++q)
    out.push_back({pid, session, q, "egemaps", std::vector<double>(dim, 0.25 * q), 0});
  return out;
}

}  // namespace

TEST_CASE("ingesting 18 records fills one session") {
  TempDir dir("ingest");
  const auto path = dir.path() / "egemaps.jsonl";
  write_feature_records(records_for("P07", 3, 18, 88), path);
  const auto result = ingest_features(path, {"egemaps", 88}, one_session_store());
  CHECK(result.count == 18);
  CHECK(result.store.find_session("P07", 3)->responses.size() == 18);
  CHECK(validate_cohort(result.store).ok());
}

TEST_CASE("ingesting an empty file changes nothing") {
  TempDir dir("ingest_empty");
  const auto path = dir.path() / "empty.jsonl";
  std::ofstream(path).close();
  const auto store = one_session_store();
  const auto result = ingest_features(path, {"egemaps", 88}, store);
  CHECK(result.count == 0);
  CHECK(result.store == store);
}

TEST_CASE("ingest rejects bad records") {
  const auto store = one_session_store();
  SUBCASE("87 values under egemaps") {
    auto recs = records_for("P07", 3, 1, 87);
    CHECK_THROWS_WITH_AS(ingest_records(recs, {"egemaps", 88}, store), doctest::Contains("dimension mismatch"),
                         ValidationError);
  }
  SUBCASE("unknown session lists the offending records") {
    auto recs = records_for("P07", 3, 2, 88);
    recs[0].session = 5;
    recs[1].participant = "P99";
    try {
      ingest_records(recs, {"egemaps", 88}, store);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("P07/session 5") != std::string::npos);
      CHECK(what.find("P99/session 3") != std::string::npos);
    }
  }
  SUBCASE("undeclared modality") {
    CHECK_THROWS_AS(ingest_records({}, {"bert", 768}, store), ValidationError);
  }
  SUBCASE("question already present") {
    auto first = ingest_records(records_for("P07", 3, 2, 88), {"egemaps", 88}, store);
    CHECK_THROWS_WITH_AS(ingest_records(records_for("P07", 3, 1, 88), {"egemaps", 88}, first.store),
                         doctest::Contains("duplicate question"), ValidationError);
  }
}

TEST_CASE("feature file parse errors carry the line number") {
  TempDir dir("parse");
  const auto path = dir.path() / "bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"participant": "P07", "session": 3, "question": 1, "modality": "egemaps", "vector": [1.0]})" << "\n";
    out << R"({"participant": "P07", "session": 3, "question": 2, "modality": "egemaps", "vector": [1.0, "x"]})"
        << "\n";
  }
  try {
    read_feature_records(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << R"({"participant": "P07", "session": 9, "question": 1, "modality": "egemaps", "vector": [1.0]})" << "\n";
  }
  CHECK_THROWS_AS(read_feature_records(path), ParseError);
}

TEST_CASE("pool_session averages response vectors") {
  SessionRecord s{"P1", 1, 28, CognitiveState::HC, {}};
  const ModalitySpec m{"a", 2};
  SUBCASE("identical vectors") {
    for (int q = 1; q <= 18; ++q) s.responses.push_back({q, "a", {0.3, -7.25}});
    const auto v = pool_session(s, m).vector;
    CHECK(v[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(v[1] == -7.25);
  }
  SUBCASE("two vectors") {
    s.responses.push_back({1, "a", {1, 3}});
    s.responses.push_back({2, "a", {3, 5}});
    CHECK(pool_session(s, m).vector == std::vector<double>{2, 4});
  }
  SUBCASE("other modalities ignored, none present is an error") {
    s.responses.push_back({1, "b", {1, 3}});
    CHECK_THROWS_AS(pool_session(s, m), ValidationError);
  }
}

TEST_CASE("pool_session matches an independent summation oracle") {
  std::mt19937_64 rng(11);
  SessionRecord s{"P1", 1, 28, CognitiveState::HC, {}};
  const ModalitySpec m{"egemaps", 88};
  for (int q = 1; q <= 18; ++q) s.responses.push_back({q, "egemaps", random_vector(rng, 88, -5, 5)});
  const auto pooled = pool_session(s, m).vector;
  for (std::size_t d = 0; d < 88; ++d) {
    long double sum = 0;
    for (const auto& r : s.responses) sum += r.vector[d];
    CHECK(pooled[d] == doctest::Approx(static_cast<double>(sum / 18)).epsilon(1e-14));
  }
}

TEST_CASE("pooling is permutation invariant and linear") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> vs;
  for (int i = 0; i < 18; ++i) vs.push_back(random_vector(rng, 6));
  const auto base = pool_vectors(vs);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = vs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto p = pool_vectors(shuffled);
    for (std::size_t d = 0; d < 6; ++d) CHECK(p[d] == doctest::Approx(base[d]).epsilon(1e-13));

    const double alpha = std::uniform_real_distribution<double>(-3, 3)(rng);
    auto scaled = vs;
    for (auto& v : scaled)
      for (auto& x : v) x *= alpha;
    const auto ps = pool_vectors(scaled);
    for (std::size_t d = 0; d < 6; ++d) CHECK(ps[d] == doctest::Approx(alpha * base[d]).epsilon(1e-12));
  }
}

TEST_CASE("fit_minmax") {
  SUBCASE("three scalars") {
    std::vector<std::vector<double>> v{{2}, {4}, {6}};
    const auto s = fit_minmax(v);
    CHECK(s.min() == std::vector<double>{2});
    CHECK(s.max() == std::vector<double>{6});
  }
  SUBCASE("single vector") {
    std::vector<std::vector<double>> v{{1, -2, 3}};
    const auto s = fit_minmax(v);
    CHECK(s.min() == v[0]);
    CHECK(s.max() == v[0]);
  }
  SUBCASE("empty is an error") {
    CHECK_THROWS_AS(fit_minmax(std::vector<std::vector<double>>{}), ValidationError);
  }
  SUBCASE("naive scan oracle") {
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> v;
    for (int i = 0; i < 100; ++i) v.push_back(random_vector(rng, 12, -50, 50));
    const auto s = fit_minmax(v);
    for (std::size_t d = 0; d < 12; ++d) {
      double lo = 1e300;
      double hi = -1e300;
      for (const auto& x : v) {
        if (x[d] < lo) lo = x[d];
        if (x[d] > hi) hi = x[d];
      }
      CHECK(s.min()[d] == lo);
      CHECK(s.max()[d] == hi);
    }
  }
}

TEST_CASE("apply_minmax") {
  const MinMaxScaler s({2, 0, 5}, {6, 10, 5});
  CHECK(apply_minmax(s, std::vector<double>{4, 12, 7}) == std::vector<double>{0.5, 1.2, 0.0});
  CHECK(apply_minmax(s, std::vector<double>{2, -5, 5}) == std::vector<double>{0.0, -0.5, 0.0});
  CHECK_THROWS_AS(apply_minmax(s, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("fitted scaler maps the training vectors into the unit cube") {
  std::mt19937_64 rng(9);
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 40; ++i) v.push_back(random_vector(rng, 7, -100, 100));
  v.push_back(std::vector<double>(7, 1.0));
  const auto s = fit_minmax(v);
  for (const auto& x : v) {
    const auto y = s.apply(x);
    for (double t : y) {
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
    }
  }
  // rank preserving per dimension
  for (std::size_t d = 0; d < 7; ++d)
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      CHECK((v[i][d] < v[i + 1][d]) == (s.apply(v[i])[d] < s.apply(v[i + 1])[d]));
}

TEST_CASE("fuse concatenates") {
  const std::vector<double> eg(88, 1.0);
  const std::vector<double> bert(768, 2.0);
  CHECK(fuse(eg, bert).size() == 856);
  const std::vector<double> v{1, 2, 3};
  CHECK(fuse(std::vector<double>{}, v) == v);
  const std::vector<double> a{1, 2};
  const std::vector<double> b{3, 4, 5};
  const auto ab = fuse(a, b);
  CHECK(std::vector<double>(ab.begin(), ab.begin() + 2) == a);
  CHECK(std::vector<double>(ab.begin() + 2, ab.end()) == b);
  const std::vector<double> c{6};
  CHECK(fuse(fuse(a, b), c) == fuse(a, fuse(b, c)));
  CHECK_THROWS_AS(fuse(a, std::vector<double>{std::numeric_limits<double>::infinity()}), ValidationError);
}
