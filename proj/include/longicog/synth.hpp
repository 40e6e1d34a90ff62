#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "longicog/cohort.hpp"

namespace longicog {

/// Synthetic stand-in for a longitudinal speech cohort.
///
/// Each participant starts MCI with probability `mci_prior` and flips state at
/// each session boundary with probability `p_flip`. A response vector is the
/// class mean (0 for HC, `separation` on the first `informative_dims`
/// dimensions for MCI) plus session noise shared by all responses of the
/// session plus independent response noise.
struct SynthConfig {
  /// (participant count, sessions each); the total count must equal n_participants.
  std::vector<std::pair<int, int>> schedule{{34, 7}, {1, 5}};
  int n_participants = 35;
  int n_questions = 18;
  std::vector<ModalitySpec> modalities{{"synth", 32}};
  std::size_t informative_dims = 8;
  double separation = 0.5;
  double sigma_session = 1.5;
  double sigma_response = 0.5;
  double p_flip = 0.1;
  double mci_prior = 20.0 / 35.0;
  double moca_mean_hc = 27.3;
  double moca_mean_mci = 22.9;
  double moca_sd = 1.5;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Parses "34x7,1x5".
std::vector<std::pair<int, int>> parse_schedule(const std::string& text);
std::string format_schedule(const std::vector<std::pair<int, int>>& schedule);

CohortStore generate_cohort(const SynthConfig& config);

struct CohortSummary {
  std::size_t participants = 0;
  std::size_t sessions = 0;
  std::size_t responses = 0;
  std::size_t hc_sessions = 0;
  std::size_t mci_sessions = 0;
  /// State changes between consecutive sessions of one participant.
  std::size_t transitions = 0;
  std::size_t improvements = 0;  // MCI -> HC
  std::size_t declines = 0;      // HC -> MCI
  double mci_fraction = 0.0;
};

CohortSummary describe_cohort(const CohortStore& store);
std::string format_summary(const CohortSummary& summary);

}  // namespace longicog
