#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace longicog {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed cohort or feature file. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

enum class CognitiveState : std::uint8_t { HC = 0, MCI = 1 };
enum class ChangeLabel : std::uint8_t { Improved = 0, Decline = 1, NoChange = 2 };

inline constexpr int kMocaMin = 0;
inline constexpr int kMocaMax = 30;
inline constexpr int kMocaCutoff = 26;
inline constexpr int kMinSessionIndex = 1;
inline constexpr int kMaxSessionIndex = 7;
inline constexpr int kMinQuestion = 1;
inline constexpr int kMaxQuestion = 18;

std::string_view to_string(CognitiveState s);
std::string_view to_string(ChangeLabel c);
CognitiveState parse_state(std::string_view s);

/// HC iff score >= 26. Throws ValidationError outside [0,30].
CognitiveState derive_state(int moca_score);

struct ModalitySpec {
  std::string name;
  std::size_t dimension = 0;

  bool operator==(const ModalitySpec&) const = default;
};

struct ResponseFeature {
  int question_id = 0;
  std::string modality;
  std::vector<double> vector;

  bool operator==(const ResponseFeature&) const = default;
};

struct SessionRecord {
  std::string participant_id;
  int session_index = 0;
  int moca_score = 0;
  CognitiveState state = CognitiveState::HC;
  std::vector<ResponseFeature> responses;

  bool operator==(const SessionRecord&) const = default;
};

struct Participant {
  std::string id;
  std::optional<std::string> age_band;
  std::optional<std::string> sex;
  std::vector<int> session_indices;

  bool operator==(const Participant&) const = default;
};

/// Participants, sessions, and per-response feature vectors.
///
/// The store is a plain value. It may hold ill-formed data (that is what
/// validate_cohort reports on); builders call `require_valid` first.
struct CohortStore {
  std::vector<ModalitySpec> modalities;
  std::vector<Participant> participants;
  std::vector<SessionRecord> sessions;

  bool operator==(const CohortStore&) const = default;

  const ModalitySpec* find_modality(std::string_view name) const;
  const Participant* find_participant(std::string_view id) const;
  const SessionRecord* find_session(std::string_view participant, int index) const;
  SessionRecord* find_session(std::string_view participant, int index);

  /// Sessions of one participant ordered by session index.
  std::vector<const SessionRecord*> sessions_of(std::string_view participant) const;

  /// Sort participants by id and sessions by (participant, index);
  /// responses by (modality, question). Idempotent.
  void canonicalize();
};

enum class FindingKind {
  DimensionMismatch,
  DuplicateSession,
  DuplicateParticipant,
  DuplicateModality,
  DuplicateQuestion,
  UnknownModality,
  UnknownParticipant,
  NonFinite,
  InvalidModality,
  StateMismatch,
  OutOfRange,
  SessionIndexMismatch,
};

std::string_view to_string(FindingKind k);

struct Finding {
  FindingKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(FindingKind k) const;
};

ValidationReport validate_cohort(const CohortStore& store);

/// Throws ValidationError carrying the first few findings if the store is not
/// well-formed.
void require_valid(const CohortStore& store);

/// Directory layout: `cohort.json` plus `features/<modality>.jsonl`.
void save_cohort(const CohortStore& store, const std::filesystem::path& dir);
CohortStore load_cohort(const std::filesystem::path& dir);

std::filesystem::path feature_file_path(const std::filesystem::path& dir, std::string_view modality);

}  // namespace longicog
