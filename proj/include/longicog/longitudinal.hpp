#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "longicog/cohort.hpp"
#include "longicog/dataset.hpp"

namespace longicog {

enum class StateMode { Baseline, Historical };
std::string_view to_string(StateMode m);
StateMode parse_state_mode(std::string_view s);

/// How the sessions up to j are aggregated in historical mode.
struct HistoryScheme {
  enum class Kind { Mean, Ewma };
  Kind kind = Kind::Mean;
  /// ewma decay toward older sessions: weight of session x is decay^(j-x).
  double decay = 0.5;

  static HistoryScheme mean() { return {}; }
  static HistoryScheme ewma(double decay) { return {Kind::Ewma, decay}; }
  std::string name() const;
};

enum class PairScheme { Concat, ConcatDiff };
std::string_view to_string(PairScheme s);
PairScheme parse_pair_scheme(std::string_view s);

struct StateSample {
  std::vector<double> features;
  CognitiveState label = CognitiveState::HC;
  std::string participant_id;
  int session_index = 0;
  StateMode mode = StateMode::Baseline;
};

struct ChangeSample {
  std::vector<double> features;
  ChangeLabel label = ChangeLabel::NoChange;
  std::string participant_id;
  int from_index = 0;
  int to_index = 0;

  int gap() const { return to_index > from_index ? to_index - from_index : from_index - to_index; }
};

/// Pooled (and, for several modalities, fused in the given order) vector per
/// (participant, session index).
using SessionFeatureMap = std::map<std::pair<std::string, int>, std::vector<double>>;
SessionFeatureMap session_features(const CohortStore& store, const std::vector<std::string>& modalities);

/// `vectors` are ordered oldest to newest; the last one is the current session.
std::vector<double> history_pool(std::span<const std::vector<double>> vectors,
                                 const HistoryScheme& scheme = HistoryScheme::mean());

/// One sample per (participant, session), sorted by participant then index.
std::vector<StateSample> build_state_dataset(const CohortStore& store, StateMode mode,
                                             const std::vector<std::string>& modalities,
                                             const HistoryScheme& scheme = HistoryScheme::mean());

ChangeLabel change_label(CognitiveState from, CognitiveState to);

/// Every ordered pair (x, y), x != y, lexicographic.
std::vector<std::pair<int, int>> enumerate_pairs(std::span<const int> session_indices);

std::vector<double> pair_features(std::span<const double> from, std::span<const double> to,
                                  PairScheme scheme = PairScheme::Concat);

std::vector<ChangeSample> build_change_dataset(const CohortStore& store, const std::vector<std::string>& modalities,
                                               PairScheme scheme = PairScheme::Concat);

/// Class index = enum value. Binary: HC=0, MCI=1. Change: improved, decline, no_change.
Dataset to_dataset(const std::vector<StateSample>& samples);
Dataset to_dataset(const std::vector<ChangeSample>& samples);

/// JSON Lines export with provenance fields.
void export_samples(const std::vector<StateSample>& samples, const std::filesystem::path& path);
void export_samples(const std::vector<ChangeSample>& samples, const std::filesystem::path& path);

}  // namespace longicog
