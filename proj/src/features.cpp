#include "longicog/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace longicog {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

FeatureRecord parse_record(const std::string& line, const std::string& file, std::size_t lineno) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(file, lineno, e.what());
  }
  if (!j.is_object()) throw ParseError(file, lineno, "record must be a JSON object");

  FeatureRecord rec;
  rec.line = lineno;
  try {
    rec.participant = j.at("participant").get<std::string>();
    rec.session = j.at("session").get<int>();
    rec.question = j.at("question").get<int>();
    rec.modality = j.at("modality").get<std::string>();
    const auto& jv = j.at("vector");
    if (!jv.is_array()) throw ParseError(file, lineno, "'vector' must be an array");
    rec.vector.reserve(jv.size());
    for (const auto& x : jv) {
      if (!x.is_number()) throw ParseError(file, lineno, "'vector' entries must be numbers");
      rec.vector.push_back(x.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file, lineno, e.what());
  }
  if (rec.session < kMinSessionIndex || rec.session > kMaxSessionIndex)
    throw ParseError(file, lineno, "session " + std::to_string(rec.session) + " outside [1,7]");
  if (rec.question < kMinQuestion || rec.question > kMaxQuestion)
    throw ParseError(file, lineno, "question " + std::to_string(rec.question) + " outside [1,18]");
  if (!all_finite(rec.vector)) throw ParseError(file, lineno, "non-finite value in vector");
  return rec;
}

}  // namespace

std::vector<FeatureRecord> read_feature_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<FeatureRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_record(line, path.string(), lineno));
  }
  return out;
}

void write_feature_records(const std::vector<FeatureRecord>& records, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) {
    ojson j;
    j["participant"] = r.participant;
    j["session"] = r.session;
    j["question"] = r.question;
    j["modality"] = r.modality;
    j["vector"] = r.vector;
    out << j.dump() << '\n';
  }
}

IngestResult ingest_features(const fs::path& path, const ModalitySpec& modality, const CohortStore& store) {
  return ingest_records(read_feature_records(path), modality, store);
}

IngestResult ingest_records(const std::vector<FeatureRecord>& records, const ModalitySpec& modality,
                            const CohortStore& store) {
  const ModalitySpec* declared = store.find_modality(modality.name);
  if (!declared) throw ValidationError("unknown modality '" + modality.name + "'");
  if (declared->dimension != modality.dimension)
    throw ValidationError("modality '" + modality.name + "' declared with dimension " +
                          std::to_string(declared->dimension) + ", got " + std::to_string(modality.dimension));

  IngestResult result{store, 0};
  std::set<std::tuple<std::string, int, int>> taken;
  for (const auto& s : store.sessions)
    for (const auto& r : s.responses)
      if (r.modality == modality.name) taken.emplace(s.participant_id, s.session_index, r.question_id);

  std::vector<std::string> problems;
  auto where = [](const FeatureRecord& r) {
    std::ostringstream os;
    if (r.line) os << "line " << r.line << ": ";
    os << r.participant << "/session " << r.session << " q" << r.question;
    return os.str();
  };
  for (const auto& r : records) {
    if (r.modality != modality.name) {
      problems.push_back(where(r) + ": modality '" + r.modality + "' != '" + modality.name + "'");
      continue;
    }
    if (r.vector.size() != modality.dimension) {
      problems.push_back(where(r) + ": dimension mismatch (" + std::to_string(r.vector.size()) +
                         " != " + std::to_string(modality.dimension) + ")");
      continue;
    }
    if (!all_finite(r.vector)) {
      problems.push_back(where(r) + ": non-finite value");
      continue;
    }
    SessionRecord* s = result.store.find_session(r.participant, r.session);
    if (!s) {
      problems.push_back(where(r) + ": unknown participant/session");
      continue;
    }
    if (!taken.emplace(r.participant, r.session, r.question).second) {
      problems.push_back(where(r) + ": duplicate question");
      continue;
    }
    s->responses.push_back({r.question, r.modality, r.vector});
    ++result.count;
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << problems.size() << " offending record(s) for modality '" << modality.name << "':";
    for (const auto& p : problems) os << "\n  " << p;
    throw ValidationError(os.str());
  }
  return result;
}

std::vector<double> pool_vectors(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw ValidationError("cannot pool zero vectors");
  const std::size_t d = vectors.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != d) throw ValidationError("pooled vectors differ in dimension");
    for (std::size_t i = 0; i < d; ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (auto& x : sum) x /= n;
  return sum;
}

SessionFeature pool_session(const SessionRecord& session, const ModalitySpec& modality) {
  std::vector<std::vector<double>> vs;
  for (const auto& r : session.responses)
    if (r.modality == modality.name) {
      if (r.vector.size() != modality.dimension)
        throw ValidationError("response vector length does not match modality '" + modality.name + "'");
      vs.push_back(r.vector);
    }
  if (vs.empty())
    throw ValidationError("session " + session.participant_id + "/" + std::to_string(session.session_index) +
                          " has no responses for modality '" + modality.name + "'");
  return {session.participant_id, session.session_index, modality.name, pool_vectors(vs)};
}

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw ValidationError("scaler min/max length differ");
  for (std::size_t i = 0; i < min_.size(); ++i)
    if (!(min_[i] <= max_[i])) throw ValidationError("scaler min > max");
}

void MinMaxScaler::apply_inplace(std::span<double> x) const {
  if (x.size() != min_.size())
    throw ValidationError("scaler dimension " + std::to_string(min_.size()) + " != input " + std::to_string(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double range = max_[i] - min_[i];
    x[i] = range == 0.0 ? 0.0 : (x[i] - min_[i]) / range;
  }
}

std::vector<double> MinMaxScaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_inplace(out);
  return out;
}

MinMaxScaler fit_minmax(std::span<const std::vector<double>> train_vectors) {
  if (train_vectors.empty()) throw ValidationError("cannot fit min-max scaler on zero vectors");
  std::vector<double> lo = train_vectors.front();
  std::vector<double> hi = lo;
  for (const auto& v : train_vectors) {
    if (v.size() != lo.size()) throw ValidationError("scaler training vectors differ in dimension");
    for (std::size_t i = 0; i < v.size(); ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

std::vector<double> apply_minmax(const MinMaxScaler& scaler, std::span<const double> x) { return scaler.apply(x); }

std::vector<double> fuse(std::span<const double> a, std::span<const double> b) {
  if (!all_finite(a) || !all_finite(b)) throw ValidationError("cannot fuse non-finite vectors");
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace longicog
