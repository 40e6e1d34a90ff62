#include "longicog/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "longicog/features.hpp"

namespace longicog {

namespace {

std::vector<std::string> sorted_participant_ids(const CohortStore& store) {
  std::vector<std::string> ids;
  for (const auto& p : store.participants) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

template <class Sample>
Matrix stack_features(const std::vector<Sample>& samples) {
  const Eigen::Index d = samples.empty() ? 0 : static_cast<Eigen::Index>(samples.front().features.size());
  Matrix m(static_cast<Eigen::Index>(samples.size()), d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(samples[i].features.size()) != d)
      throw ValidationError("samples differ in feature dimension");
    for (Eigen::Index c = 0; c < d; ++c) m(static_cast<Eigen::Index>(i), c) = samples[i].features[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

std::string_view to_string(StateMode m) { return m == StateMode::Baseline ? "baseline" : "historical"; }

StateMode parse_state_mode(std::string_view s) {
  if (s == "baseline") return StateMode::Baseline;
  if (s == "historical") return StateMode::Historical;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected baseline|historical)");
}

std::string HistoryScheme::name() const {
  if (kind == Kind::Mean) return "mean";
  nlohmann::json j = decay;
  return "ewma(" + j.dump() + ")";
}

std::string_view to_string(PairScheme s) { return s == PairScheme::Concat ? "concat" : "concat+diff"; }

PairScheme parse_pair_scheme(std::string_view s) {
  if (s == "concat") return PairScheme::Concat;
  if (s == "concat+diff") return PairScheme::ConcatDiff;
  throw ValidationError("unknown pair scheme '" + std::string(s) + "' (expected concat|concat+diff)");
}

SessionFeatureMap session_features(const CohortStore& store, const std::vector<std::string>& modalities) {
  if (modalities.empty()) throw ValidationError("at least one modality is required");
  std::vector<const ModalitySpec*> specs;
  for (const auto& name : modalities) {
    const ModalitySpec* m = store.find_modality(name);
    if (!m) throw ValidationError("unknown modality '" + name + "'");
    specs.push_back(m);
  }
  SessionFeatureMap out;
  for (const auto& s : store.sessions) {
    std::vector<double> v;
    for (const auto* m : specs) v = fuse(v, pool_session(s, *m).vector);
    out.emplace(std::make_pair(s.participant_id, s.session_index), std::move(v));
  }
  return out;
}

std::vector<double> history_pool(std::span<const std::vector<double>> vectors, const HistoryScheme& scheme) {
  if (vectors.empty()) throw ValidationError("history pooling needs at least one session");
  if (scheme.kind == HistoryScheme::Kind::Mean) return pool_vectors(vectors);

  if (!(scheme.decay > 0.0 && scheme.decay <= 1.0)) throw ValidationError("ewma decay must be in (0,1]");
  const std::size_t d = vectors.front().size();
  std::vector<double> acc(d, 0.0);
  double weight = 1.0;
  double total = 0.0;
  for (std::size_t k = vectors.size(); k-- > 0;) {
    if (vectors[k].size() != d) throw ValidationError("history vectors differ in dimension");
    for (std::size_t i = 0; i < d; ++i) acc[i] += weight * vectors[k][i];
    total += weight;
    weight *= scheme.decay;
  }
  for (auto& x : acc) x /= total;
  return acc;
}

std::vector<StateSample> build_state_dataset(const CohortStore& store, StateMode mode,
                                             const std::vector<std::string>& modalities, const HistoryScheme& scheme) {
  require_valid(store);
  const SessionFeatureMap feats = session_features(store, modalities);
  std::vector<StateSample> out;
  for (const auto& pid : sorted_participant_ids(store)) {
    std::vector<std::vector<double>> history;
    for (const SessionRecord* s : store.sessions_of(pid)) {
      const auto& v = feats.at({pid, s->session_index});
      history.push_back(v);
      StateSample sample;
      sample.features = mode == StateMode::Baseline ? v : history_pool(history, scheme);
      sample.label = s->state;
      sample.participant_id = pid;
      sample.session_index = s->session_index;
      sample.mode = mode;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

ChangeLabel change_label(CognitiveState from, CognitiveState to) {
  if (from == to) return ChangeLabel::NoChange;
  return from == CognitiveState::MCI ? ChangeLabel::Improved : ChangeLabel::Decline;
}

std::vector<std::pair<int, int>> enumerate_pairs(std::span<const int> session_indices) {
  std::vector<int> idx(session_indices.begin(), session_indices.end());
  std::sort(idx.begin(), idx.end());
  std::vector<std::pair<int, int>> out;
  out.reserve(idx.size() * (idx.size() > 0 ? idx.size() - 1 : 0));
  for (int x : idx)
    for (int y : idx)
      if (x != y) out.emplace_back(x, y);
  return out;
}

std::vector<double> pair_features(std::span<const double> from, std::span<const double> to, PairScheme scheme) {
  if (from.size() != to.size())
    throw ValidationError("pair vectors differ in dimension (" + std::to_string(from.size()) + " vs " +
                          std::to_string(to.size()) + ")");
  std::vector<double> out(from.begin(), from.end());
  out.insert(out.end(), to.begin(), to.end());
  if (scheme == PairScheme::ConcatDiff)
    for (std::size_t i = 0; i < from.size(); ++i) out.push_back(to[i] - from[i]);
  return out;
}

std::vector<ChangeSample> build_change_dataset(const CohortStore& store, const std::vector<std::string>& modalities,
                                               PairScheme scheme) {
  require_valid(store);
  const SessionFeatureMap feats = session_features(store, modalities);
  std::vector<ChangeSample> out;
  for (const auto& pid : sorted_participant_ids(store)) {
    const auto sessions = store.sessions_of(pid);
    std::vector<int> indices;
    std::map<int, CognitiveState> state;
    for (const SessionRecord* s : sessions) {
      indices.push_back(s->session_index);
      state[s->session_index] = s->state;
    }
    for (auto [x, y] : enumerate_pairs(indices)) {
      ChangeSample sample;
      sample.features = pair_features(feats.at({pid, x}), feats.at({pid, y}), scheme);
      sample.label = change_label(state.at(x), state.at(y));
      sample.participant_id = pid;
      sample.from_index = x;
      sample.to_index = y;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

Dataset to_dataset(const std::vector<StateSample>& samples) {
  Dataset ds;
  ds.features = stack_features(samples);
  ds.class_names = {"HC", "MCI"};
  for (const auto& s : samples) {
    ds.labels.push_back(static_cast<int>(s.label));
    ds.groups.push_back(s.participant_id);
  }
  return ds;
}

Dataset to_dataset(const std::vector<ChangeSample>& samples) {
  Dataset ds;
  ds.features = stack_features(samples);
  ds.class_names = {"improved", "decline", "no_change"};
  for (const auto& s : samples) {
    ds.labels.push_back(static_cast<int>(s.label));
    ds.groups.push_back(s.participant_id);
  }
  return ds;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.class_names = class_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    if (!groups.empty()) out.groups.push_back(groups[rows[i]]);
  }
  return out;
}

void export_samples(const std::vector<StateSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["participant"] = s.participant_id;
    j["session"] = s.session_index;
    j["mode"] = std::string(to_string(s.mode));
    j["label"] = std::string(to_string(s.label));
    j["features"] = s.features;
    out << j.dump() << '\n';
  }
}

void export_samples(const std::vector<ChangeSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["participant"] = s.participant_id;
    j["from"] = s.from_index;
    j["to"] = s.to_index;
    j["gap"] = s.gap();
    j["label"] = std::string(to_string(s.label));
    j["features"] = s.features;
    out << j.dump() << '\n';
  }
}

}  // namespace longicog
