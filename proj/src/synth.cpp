#include "longicog/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace longicog {

void SynthConfig::validate() const {
  int total = 0;
  for (auto [count, sessions] : schedule) {
    if (count < 0) throw ValidationError("schedule counts must be non-negative");
    if (sessions < 1 || sessions > kMaxSessionIndex) throw ValidationError("sessions per participant must be in [1,7]");
    total += count;
  }
  if (total != n_participants)
    throw ValidationError("schedule covers " + std::to_string(total) + " participants, n_participants is " +
                          std::to_string(n_participants));
  if (n_questions < 1 || n_questions > kMaxQuestion) throw ValidationError("n_questions must be in [1,18]");
  if (modalities.empty()) throw ValidationError("at least one modality is required");
  for (const auto& m : modalities) {
    if (m.name.empty() || m.dimension < 1) throw ValidationError("modalities need a name and dimension >= 1");
    if (m.dimension < informative_dims)
      throw ValidationError("modality '" + m.name + "' has fewer dimensions than informative_dims");
  }
  if (!(sigma_session >= 0.0) || !(sigma_response >= 0.0) || !(moca_sd >= 0.0))
    throw ValidationError("noise levels must be >= 0");
  if (!(p_flip >= 0.0 && p_flip <= 1.0)) throw ValidationError("p_flip must be in [0,1]");
  if (!(mci_prior >= 0.0 && mci_prior <= 1.0)) throw ValidationError("mci_prior must be in [0,1]");
  if (!std::isfinite(separation)) throw ValidationError("separation must be finite");
}

std::vector<std::pair<int, int>> parse_schedule(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int count = 0;
    int sessions = 0;
    char x = 0;
    char extra = 0;
    if (std::sscanf(item.c_str(), " %d %c %d %c", &count, &x, &sessions, &extra) != 3 || (x != 'x' && x != 'X'))
      throw ValidationError("bad schedule entry '" + item + "' (expected COUNTxSESSIONS)");
    out.emplace_back(count, sessions);
  }
  if (out.empty()) throw ValidationError("empty schedule");
  return out;
}

std::string format_schedule(const std::vector<std::pair<int, int>>& schedule) {
  std::string out;
  for (auto [count, sessions] : schedule) {
    if (!out.empty()) out += ",";
    out += std::to_string(count) + "x" + std::to_string(sessions);
  }
  return out;
}

CohortStore generate_cohort(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution start_mci(config.mci_prior);
  std::bernoulli_distribution flip(config.p_flip);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> unit(0.0, 1.0);
  const char* age_bands[] = {"65-69", "70-74", "75-79", "80+"};
  std::uniform_int_distribution<int> age_pick(0, 3);

  auto draw_moca = [&](CognitiveState state) {
    const double mean = state == CognitiveState::HC ? config.moca_mean_hc : config.moca_mean_mci;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double raw = mean + config.moca_sd * unit(rng);
      const int score = std::clamp(static_cast<int>(std::lround(raw)), kMocaMin, kMocaMax);
      if (derive_state(score) == state) return score;
    }
    return state == CognitiveState::HC ? kMocaCutoff : kMocaCutoff - 1;
  };

  CohortStore store;
  store.modalities = config.modalities;
  int pid = 0;
  const int width = config.n_participants >= 100 ? 3 : 2;
  for (auto [count, n_sessions] : config.schedule) {
    for (int c = 0; c < count; ++c) {
      ++pid;
      char id_buf[16];
      std::snprintf(id_buf, sizeof id_buf, "P%0*d", width, pid);
      Participant p;
      p.id = id_buf;
      p.sex = coin(rng) ? "F" : "M";
      p.age_band = age_bands[age_pick(rng)];

      CognitiveState state = start_mci(rng) ? CognitiveState::MCI : CognitiveState::HC;
      for (int s = 1; s <= n_sessions; ++s) {
        if (s > 1 && flip(rng)) state = state == CognitiveState::HC ? CognitiveState::MCI : CognitiveState::HC;
        SessionRecord rec;
        rec.participant_id = p.id;
        rec.session_index = s;
        rec.moca_score = draw_moca(state);
        rec.state = state;
        const double shift = state == CognitiveState::MCI ? config.separation : 0.0;
        for (const auto& m : config.modalities) {
          std::vector<double> session_noise(m.dimension);
          for (auto& e : session_noise) e = config.sigma_session * unit(rng);
          for (int q = 1; q <= config.n_questions; ++q) {
            std::vector<double> v(m.dimension);
            for (std::size_t d = 0; d < m.dimension; ++d)
              v[d] = (d < config.informative_dims ? shift : 0.0) + session_noise[d] + config.sigma_response * unit(rng);
            rec.responses.push_back({q, m.name, std::move(v)});
          }
        }
        p.session_indices.push_back(s);
        store.sessions.push_back(std::move(rec));
      }
      store.participants.push_back(std::move(p));
    }
  }
  store.canonicalize();
  return store;
}

CohortSummary describe_cohort(const CohortStore& store) {
  CohortSummary s;
  s.participants = store.participants.size();
  s.sessions = store.sessions.size();
  for (const auto& rec : store.sessions) {
    s.responses += rec.responses.size();
    (rec.state == CognitiveState::HC ? s.hc_sessions : s.mci_sessions) += 1;
  }
  for (const auto& p : store.participants) {
    const auto seq = store.sessions_of(p.id);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (seq[i]->state == seq[i - 1]->state) continue;
      ++s.transitions;
      (seq[i]->state == CognitiveState::HC ? s.improvements : s.declines) += 1;
    }
  }
  s.mci_fraction = s.sessions ? static_cast<double>(s.mci_sessions) / static_cast<double>(s.sessions) : 0.0;
  return s;
}

std::string format_summary(const CohortSummary& s) {
  std::ostringstream os;
  os << "participants: " << s.participants << "\n"
     << "sessions: " << s.sessions << " (HC " << s.hc_sessions << ", MCI " << s.mci_sessions << ")\n"
     << "responses: " << s.responses << "\n"
     << "transitions: " << s.transitions << " (improved " << s.improvements << ", decline " << s.declines << ")\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s.mci_fraction);
  os << "mci fraction: " << buf << "\n";
  return os.str();
}

}  // namespace longicog
