#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "casemix/alteration.hpp"
#include "casemix/capacity.hpp"

namespace casemix {

enum class Decision { pending, accepted, rejected };

const char* to_string(Decision d);
std::optional<Decision> parse_decision(const std::string& text);

// Raised for unknown sessions or entries and for decisions that no longer
// apply to the session's current mix.
class SessionError : public std::runtime_error {
 public:
  enum class Kind { not_found, conflict };
  SessionError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct HistoryEntry {
  AlterationResult result;
  SubMix baseline_sub_mix;  // sub-mix the alteration started from
  AlterationOptions options;
  Decision decision = Decision::pending;
};

// One planner's working state: where they started, where they are now, and
// every alteration they have tried. Rejected entries stay in the history.
struct Session {
  std::string id;
  std::string scenario_fingerprint;
  CaseMix baseline;
  SubMix baseline_sub_mix;
  CaseMix current_mix;
  SubMix current_sub_mix;
  std::vector<HistoryEntry> history;
};

Session new_session(std::string id, const Scenario& s, std::string fingerprint, CaseMix baseline);

// Runs an alteration from the session's current mix and appends it as pending.
// `sub_type` selects a sub-type alteration. Returns the new entry's index.
std::size_t propose(Session& session, const Scenario& s, const TypeBounds& bounds,
                    std::size_t type, std::optional<std::size_t> sub_type, double delta,
                    Method method, const AlterationOptions& options = {});

// Accepting makes the entry's new mix the current mix. Only pending entries
// computed from the current mix can be accepted.
Session apply_decision(Session session, std::size_t entry, Decision decision);

// Re-runs the accepted entries in order from the original baseline.
CaseMix replay(const Session& session, const Scenario& s, const TypeBounds& bounds);

nlohmann::json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);

// Sessions kept as one JSON file each under a directory. Every mutation is
// written through; operations on one session are serialised.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  bool exists(const std::string& id);
  Session get(const std::string& id);
  void put(const Session& session);
  std::vector<std::string> list();
  // Lock held while a caller reads, modifies and writes back a session.
  std::unique_lock<std::mutex> lock(const std::string& id);

 private:
  std::filesystem::path file_for(const std::string& id) const;

  std::filesystem::path dir_;
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
  std::map<std::string, Session> cache_;
};

}  // namespace casemix
