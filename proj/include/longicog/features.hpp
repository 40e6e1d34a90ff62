#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "longicog/cohort.hpp"

namespace longicog {

/// One line of a feature JSON Lines file.
struct FeatureRecord {
  std::string participant;
  int session = 0;
  int question = 0;
  std::string modality;
  std::vector<double> vector;
  std::size_t line = 0;  // 1-based source line, 0 if not read from a file
};

/// Parses a feature JSONL file. Blank lines are skipped. Throws ParseError
/// with the offending line number on malformed records.
std::vector<FeatureRecord> read_feature_records(const std::filesystem::path& path);

/// One compact JSON object per line, LF terminated, shortest round-trip doubles.
void write_feature_records(const std::vector<FeatureRecord>& records, const std::filesystem::path& path);

struct IngestResult {
  CohortStore store;
  std::size_t count = 0;
};

/// Attaches every record of `path` to its session in a copy of `store`.
///
/// All records must carry `modality.name`, match its dimension, reference a
/// known (participant, session), and not duplicate an existing question.
/// Violations are collected and reported together in one ValidationError.
IngestResult ingest_features(const std::filesystem::path& path, const ModalitySpec& modality,
                             const CohortStore& store);

/// Same as above for records already in memory.
IngestResult ingest_records(const std::vector<FeatureRecord>& records, const ModalitySpec& modality,
                            const CohortStore& store);

struct SessionFeature {
  std::string participant_id;
  int session_index = 0;
  std::string modality;
  std::vector<double> vector;
};

/// Arithmetic mean of every response vector of `modality`. Throws if there
/// are none.
SessionFeature pool_session(const SessionRecord& session, const ModalitySpec& modality);
std::vector<double> pool_vectors(std::span<const std::vector<double>> vectors);

class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max);

  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }
  std::size_t dimension() const { return min_.size(); }

  /// (x - min) / (max - min) per dimension, 0 where max == min. No clamping.
  std::vector<double> apply(std::span<const double> x) const;
  void apply_inplace(std::span<double> x) const;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

MinMaxScaler fit_minmax(std::span<const std::vector<double>> train_vectors);
std::vector<double> apply_minmax(const MinMaxScaler& scaler, std::span<const double> x);

/// Concatenation a ‖ b. Throws on non-finite input.
std::vector<double> fuse(std::span<const double> a, std::span<const double> b);

}  // namespace longicog
