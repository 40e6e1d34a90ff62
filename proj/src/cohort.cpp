#include "longicog/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "longicog/features.hpp"

namespace longicog {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kCohortSchema = "longicog-cohort/1";

std::string parse_error_text(const std::string& file, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << file;
  if (line > 0) os << ":" << line;
  os << ": " << what;
  return os.str();
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : Error(parse_error_text(file, line, what)), file_(file), line_(line) {}

std::string_view to_string(CognitiveState s) { return s == CognitiveState::HC ? "HC" : "MCI"; }

std::string_view to_string(ChangeLabel c) {
  switch (c) {
    case ChangeLabel::Improved: return "improved";
    case ChangeLabel::Decline: return "decline";
    case ChangeLabel::NoChange: return "no_change";
  }
  return "?";
}

CognitiveState parse_state(std::string_view s) {
  if (s == "HC") return CognitiveState::HC;
  if (s == "MCI") return CognitiveState::MCI;
  throw ValidationError("unknown cognitive state '" + std::string(s) + "'");
}

CognitiveState derive_state(int moca_score) {
  if (moca_score < kMocaMin || moca_score > kMocaMax)
    throw ValidationError("MoCA score " + std::to_string(moca_score) + " outside [0,30]");
  return moca_score >= kMocaCutoff ? CognitiveState::HC : CognitiveState::MCI;
}

const ModalitySpec* CohortStore::find_modality(std::string_view name) const {
  for (const auto& m : modalities)
    if (m.name == name) return &m;
  return nullptr;
}

const Participant* CohortStore::find_participant(std::string_view id) const {
  for (const auto& p : participants)
    if (p.id == id) return &p;
  return nullptr;
}

const SessionRecord* CohortStore::find_session(std::string_view participant, int index) const {
  for (const auto& s : sessions)
    if (s.participant_id == participant && s.session_index == index) return &s;
  return nullptr;
}

SessionRecord* CohortStore::find_session(std::string_view participant, int index) {
  for (auto& s : sessions)
    if (s.participant_id == participant && s.session_index == index) return &s;
  return nullptr;
}

std::vector<const SessionRecord*> CohortStore::sessions_of(std::string_view participant) const {
  std::vector<const SessionRecord*> out;
  for (const auto& s : sessions)
    if (s.participant_id == participant) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(),
                   [](const SessionRecord* a, const SessionRecord* b) { return a->session_index < b->session_index; });
  return out;
}

void CohortStore::canonicalize() {
  std::stable_sort(participants.begin(), participants.end(),
                   [](const Participant& a, const Participant& b) { return a.id < b.id; });
  for (auto& p : participants) std::sort(p.session_indices.begin(), p.session_indices.end());
  std::stable_sort(sessions.begin(), sessions.end(), [](const SessionRecord& a, const SessionRecord& b) {
    return std::tie(a.participant_id, a.session_index) < std::tie(b.participant_id, b.session_index);
  });
  for (auto& s : sessions)
    std::stable_sort(s.responses.begin(), s.responses.end(), [](const ResponseFeature& a, const ResponseFeature& b) {
      return std::tie(a.modality, a.question_id) < std::tie(b.modality, b.question_id);
    });
}

std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::DimensionMismatch: return "dimension-mismatch";
    case FindingKind::DuplicateSession: return "duplicate-session";
    case FindingKind::DuplicateParticipant: return "duplicate-participant";
    case FindingKind::DuplicateModality: return "duplicate-modality";
    case FindingKind::DuplicateQuestion: return "duplicate-question";
    case FindingKind::UnknownModality: return "unknown-modality";
    case FindingKind::UnknownParticipant: return "unknown-participant";
    case FindingKind::NonFinite: return "non-finite";
    case FindingKind::InvalidModality: return "invalid-modality";
    case FindingKind::StateMismatch: return "state-mismatch";
    case FindingKind::OutOfRange: return "out-of-range";
    case FindingKind::SessionIndexMismatch: return "session-index-mismatch";
  }
  return "?";
}

std::size_t ValidationReport::count(FindingKind k) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [k](const Finding& f) { return f.kind == k; }));
}

ValidationReport validate_cohort(const CohortStore& store) {
  ValidationReport report;
  auto add = [&](FindingKind kind, std::string msg) { report.findings.push_back({kind, std::move(msg)}); };

  std::map<std::string, std::size_t> dims;
  for (const auto& m : store.modalities) {
    if (m.name.empty() || m.dimension < 1)
      add(FindingKind::InvalidModality, "modality '" + m.name + "' must have a name and dimension >= 1");
    if (!dims.emplace(m.name, m.dimension).second)
      add(FindingKind::DuplicateModality, "modality '" + m.name + "' declared twice");
  }

  std::map<std::string, std::set<int>> declared;
  for (const auto& p : store.participants) {
    if (declared.count(p.id)) {
      add(FindingKind::DuplicateParticipant, "participant '" + p.id + "' declared twice");
      continue;
    }
    auto& set = declared[p.id];
    for (std::size_t i = 0; i < p.session_indices.size(); ++i) {
      if (i > 0 && p.session_indices[i] <= p.session_indices[i - 1])
        add(FindingKind::SessionIndexMismatch, "participant '" + p.id + "' session indices not strictly increasing");
      set.insert(p.session_indices[i]);
    }
  }

  std::map<std::string, std::set<int>> seen;
  for (const auto& s : store.sessions) {
    const std::string where = s.participant_id + "/session " + std::to_string(s.session_index);
    if (!declared.count(s.participant_id))
      add(FindingKind::UnknownParticipant, where + ": unknown participant");
    if (s.session_index < kMinSessionIndex || s.session_index > kMaxSessionIndex)
      add(FindingKind::OutOfRange, where + ": session index outside [1,7]");
    if (!seen[s.participant_id].insert(s.session_index).second)
      add(FindingKind::DuplicateSession, where + ": duplicate session");
    if (s.moca_score < kMocaMin || s.moca_score > kMocaMax) {
      add(FindingKind::OutOfRange, where + ": MoCA " + std::to_string(s.moca_score) + " outside [0,30]");
    } else if (derive_state(s.moca_score) != s.state) {
      add(FindingKind::StateMismatch, where + ": state does not match MoCA " + std::to_string(s.moca_score));
    }

    std::set<std::pair<std::string, int>> questions;
    for (const auto& r : s.responses) {
      const std::string rwhere = where + " q" + std::to_string(r.question_id) + " [" + r.modality + "]";
      if (r.question_id < kMinQuestion || r.question_id > kMaxQuestion)
        add(FindingKind::OutOfRange, rwhere + ": question outside [1,18]");
      if (!questions.emplace(r.modality, r.question_id).second)
        add(FindingKind::DuplicateQuestion, rwhere + ": duplicate question");
      auto it = dims.find(r.modality);
      if (it == dims.end()) {
        add(FindingKind::UnknownModality, rwhere + ": unknown modality");
      } else if (r.vector.size() != it->second) {
        add(FindingKind::DimensionMismatch, rwhere + ": vector length " + std::to_string(r.vector.size()) +
                                                " != dimension " + std::to_string(it->second));
      }
      if (!std::all_of(r.vector.begin(), r.vector.end(), [](double v) { return std::isfinite(v); }))
        add(FindingKind::NonFinite, rwhere + ": non-finite value");
    }
  }

  for (const auto& [pid, set] : declared) {
    auto it = seen.find(pid);
    const std::set<int> empty;
    if (set != (it == seen.end() ? empty : it->second))
      add(FindingKind::SessionIndexMismatch, "participant '" + pid + "' session list disagrees with session records");
  }
  return report;
}

void require_valid(const CohortStore& store) {
  auto report = validate_cohort(store);
  if (report.ok()) return;
  std::ostringstream os;
  os << "cohort has " << report.findings.size() << " validation finding(s)";
  for (std::size_t i = 0; i < report.findings.size() && i < 5; ++i)
    os << "\n  " << to_string(report.findings[i].kind) << ": " << report.findings[i].message;
  throw ValidationError(os.str());
}

fs::path feature_file_path(const fs::path& dir, std::string_view modality) {
  return dir / "features" / (std::string(modality) + ".jsonl");
}

void save_cohort(const CohortStore& store, const fs::path& dir) {
  fs::create_directories(dir / "features");

  ojson doc;
  doc["schema"] = kCohortSchema;
  doc["modalities"] = ojson::array();
  for (const auto& m : store.modalities) doc["modalities"].push_back({{"name", m.name}, {"dimension", m.dimension}});
  doc["participants"] = ojson::array();
  for (const auto& p : store.participants) {
    ojson jp;
    jp["id"] = p.id;
    if (p.age_band) jp["age_band"] = *p.age_band;
    if (p.sex) jp["sex"] = *p.sex;
    jp["sessions"] = p.session_indices;
    doc["participants"].push_back(std::move(jp));
  }
  doc["sessions"] = ojson::array();
  for (const auto& s : store.sessions)
    doc["sessions"].push_back({{"participant", s.participant_id},
                               {"session", s.session_index},
                               {"moca", s.moca_score},
                               {"state", std::string(to_string(s.state))}});

  std::ofstream out(dir / "cohort.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "cohort.json").string());
  out << doc.dump(2) << '\n';

  for (const auto& m : store.modalities) {
    std::vector<FeatureRecord> records;
    for (const auto& s : store.sessions)
      for (const auto& r : s.responses)
        if (r.modality == m.name)
          records.push_back({s.participant_id, s.session_index, r.question_id, r.modality, r.vector, 0});
    write_feature_records(records, feature_file_path(dir, m.name));
  }
}

CohortStore load_cohort(const fs::path& dir) {
  const fs::path meta_path = dir / "cohort.json";
  const std::string file = meta_path.string();
  const std::string text = read_file(meta_path);

  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(file, line_of_byte(text, e.byte), e.what());
  }

  CohortStore store;
  try {
    if (!doc.is_object()) throw ParseError(file, 1, "top-level value must be an object");
    if (doc.value("schema", std::string()) != kCohortSchema)
      throw ParseError(file, 1, std::string("expected schema '") + kCohortSchema + "'");
    for (const auto& jm : doc.at("modalities"))
      store.modalities.push_back({jm.at("name").get<std::string>(), jm.at("dimension").get<std::size_t>()});
    for (const auto& jp : doc.at("participants")) {
      Participant p;
      p.id = jp.at("id").get<std::string>();
      if (jp.contains("age_band")) p.age_band = jp["age_band"].get<std::string>();
      if (jp.contains("sex")) p.sex = jp["sex"].get<std::string>();
      p.session_indices = jp.at("sessions").get<std::vector<int>>();
      store.participants.push_back(std::move(p));
    }
    for (const auto& js : doc.at("sessions")) {
      SessionRecord s;
      s.participant_id = js.at("participant").get<std::string>();
      s.session_index = js.at("session").get<int>();
      s.moca_score = js.at("moca").get<int>();
      s.state = js.contains("state") ? parse_state(js["state"].get<std::string>()) : derive_state(s.moca_score);
      store.sessions.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file, 0, e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(file, 0, e.what());
  }

  for (const auto& m : store.modalities) {
    const fs::path fpath = feature_file_path(dir, m.name);
    if (!fs::exists(fpath)) continue;
    for (auto& rec : read_feature_records(fpath)) {
      if (rec.modality != m.name)
        throw ParseError(fpath.string(), rec.line, "record modality '" + rec.modality + "' in file for '" + m.name + "'");
      SessionRecord* s = store.find_session(rec.participant, rec.session);
      if (!s)
        throw ParseError(fpath.string(), rec.line,
                         "unknown session " + rec.participant + "/" + std::to_string(rec.session));
      s->responses.push_back({rec.question, std::move(rec.modality), std::move(rec.vector)});
    }
  }
  return store;
}

}  // namespace longicog
