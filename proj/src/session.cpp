#include "casemix/session.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "casemix/store.hpp"

namespace casemix {

using nlohmann::json;

const char* to_string(Decision d) {
  switch (d) {
    case Decision::pending:
      return "pending";
    case Decision::accepted:
      return "accepted";
    case Decision::rejected:
      return "rejected";
  }
  return "pending";
}

std::optional<Decision> parse_decision(const std::string& text) {
  if (text == "pending") return Decision::pending;
  if (text == "accept" || text == "accepted") return Decision::accepted;
  if (text == "reject" || text == "rejected") return Decision::rejected;
  return std::nullopt;
}

Session new_session(std::string id, const Scenario& s, std::string fingerprint, CaseMix baseline) {
  if (baseline.size() != s.type_count())
    throw PreconditionError("baseline needs one value per patient type");
  Session out;
  out.id = std::move(id);
  out.scenario_fingerprint = std::move(fingerprint);
  out.baseline = baseline;
  out.baseline_sub_mix = proportional_sub_mix(s, baseline);
  out.current_mix = baseline;
  out.current_sub_mix = out.baseline_sub_mix;
  return out;
}

namespace {

AlterationResult run_entry(const Scenario& s, const TypeBounds& bounds, const CaseMix& mix,
                           const SubMix& sub, std::size_t type, std::optional<std::size_t> sub_type,
                           double delta, Method method, const AlterationOptions& options) {
  if (sub_type) {
    SubtypeAlterationRequest req;
    req.type = type;
    req.sub_type = *sub_type;
    req.delta = delta;
    req.method = method;
    req.baseline = sub;
    req.options = options;
    return alter_subtype(s, bounds, req);
  }
  AlterationRequest req;
  req.type = type;
  req.delta = delta;
  req.method = method;
  req.baseline = mix;
  req.options = options;
  return alter_type(s, bounds, req);
}

bool same_mix(const CaseMix& a, const CaseMix& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t g = 0; g < a.size(); ++g)
    if (std::abs(a[g] - b[g]) > 1e-9 * std::max(1.0, std::abs(a[g]))) return false;
  return true;
}

}  // namespace

std::size_t propose(Session& session, const Scenario& s, const TypeBounds& bounds,
                    std::size_t type, std::optional<std::size_t> sub_type, double delta,
                    Method method, const AlterationOptions& options) {
  HistoryEntry e;
  e.baseline_sub_mix = session.current_sub_mix;
  e.options = options;
  e.result = run_entry(s, bounds, session.current_mix, session.current_sub_mix, type, sub_type,
                       delta, method, options);
  session.history.push_back(std::move(e));
  return session.history.size() - 1;
}

Session apply_decision(Session session, std::size_t entry, Decision decision) {
  if (entry >= session.history.size())
    throw SessionError(SessionError::Kind::not_found, "session has no entry " + std::to_string(entry));
  HistoryEntry& e = session.history[entry];
  if (e.decision != Decision::pending)
    throw SessionError(SessionError::Kind::conflict,
                       "entry " + std::to_string(entry) + " is already " + to_string(e.decision));
  if (decision == Decision::pending) return session;
  if (decision == Decision::accepted) {
    if (!e.result.ok())
      throw SessionError(SessionError::Kind::conflict, "an alteration without a solution cannot be accepted");
    if (!same_mix(e.result.baseline, session.current_mix))
      throw SessionError(SessionError::Kind::conflict,
                         "entry " + std::to_string(entry) + " was computed from an earlier mix");
    session.current_mix = e.result.new_mix;
    session.current_sub_mix = e.result.new_sub_mix;
  }
  e.decision = decision;
  return session;
}

CaseMix replay(const Session& session, const Scenario& s, const TypeBounds& bounds) {
  CaseMix mix = session.baseline;
  SubMix sub = session.baseline_sub_mix;
  for (const auto& e : session.history) {
    if (e.decision != Decision::accepted) continue;
    AlterationResult r = run_entry(s, bounds, mix, sub, e.result.type, e.result.sub_type,
                                   e.result.delta, e.result.method, e.options);
    if (!r.ok()) throw SessionError(SessionError::Kind::conflict, "replay failed: " + r.message);
    mix = r.new_mix;
    sub = r.new_sub_mix;
  }
  return mix;
}

json session_to_json(const Session& session) {
  json history = json::array();
  for (const auto& e : session.history) {
    history.push_back({{"decision", to_string(e.decision)},
                       {"baseline_sub_mix", to_json(e.baseline_sub_mix)},
                       {"options",
                        {{"scaled", e.options.scaled},
                         {"breakpoints", e.options.breakpoints},
                         {"strict_eq", e.options.strict_eq},
                         {"node_limit", e.options.node_limit}}},
                       {"result", to_json(e.result)}});
  }
  return {{"id", session.id},
          {"scenario_fingerprint", session.scenario_fingerprint},
          {"baseline", to_json(session.baseline)},
          {"baseline_sub_mix", to_json(session.baseline_sub_mix)},
          {"current_mix", to_json(session.current_mix)},
          {"current_sub_mix", to_json(session.current_sub_mix)},
          {"history", history}};
}

Session session_from_json(const json& j) {
  Session s;
  try {
    s.id = j.at("id").get<std::string>();
    s.scenario_fingerprint = j.value("scenario_fingerprint", std::string{});
    s.baseline = case_mix_from_json(j.at("baseline"), "baseline");
    s.baseline_sub_mix = sub_mix_from_json(j.at("baseline_sub_mix"), "baseline_sub_mix");
    s.current_mix = case_mix_from_json(j.at("current_mix"), "current_mix");
    s.current_sub_mix = sub_mix_from_json(j.at("current_sub_mix"), "current_sub_mix");
    for (const auto& ej : j.at("history")) {
      HistoryEntry e;
      auto d = parse_decision(ej.at("decision").get<std::string>());
      if (!d) throw StoreError(StoreErrorCode::parse, "unknown decision", "history.decision");
      e.decision = *d;
      e.baseline_sub_mix = sub_mix_from_json(ej.at("baseline_sub_mix"), "history.baseline_sub_mix");
      const json& o = ej.at("options");
      e.options.scaled = o.at("scaled").get<bool>();
      e.options.breakpoints = o.at("breakpoints").get<std::size_t>();
      e.options.strict_eq = o.value("strict_eq", false);
      e.options.node_limit = o.value("node_limit", e.options.node_limit);
      e.result = alteration_from_json(ej.at("result"));
      s.history.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw StoreError(StoreErrorCode::parse, e.what(), "session");
  }
  return s;
}

namespace {

void check_id(const std::string& id) {
  const bool ok = !id.empty() && id.size() <= 64 &&
                  std::all_of(id.begin(), id.end(), [](unsigned char c) {
                    return std::isalnum(c) || c == '-' || c == '_';
                  });
  if (!ok) throw PreconditionError("session ids use letters, digits, '-' and '_' only");
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw StoreError(StoreErrorCode::io, "cannot create " + dir_.string() + ": " + ec.message());
}

std::filesystem::path SessionStore::file_for(const std::string& id) const {
  return dir_ / (id + ".json");
}

std::unique_lock<std::mutex> SessionStore::lock(const std::string& id) {
  check_id(id);
  std::mutex* m;
  {
    std::lock_guard<std::mutex> guard(map_mutex_);
    auto& slot = locks_[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    m = slot.get();
  }
  return std::unique_lock<std::mutex>(*m);
}

bool SessionStore::exists(const std::string& id) {
  check_id(id);
  {
    std::lock_guard<std::mutex> guard(map_mutex_);
    if (cache_.count(id)) return true;
  }
  return std::filesystem::exists(file_for(id));
}

Session SessionStore::get(const std::string& id) {
  check_id(id);
  {
    std::lock_guard<std::mutex> guard(map_mutex_);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
  }
  std::ifstream in(file_for(id));
  if (!in) throw SessionError(SessionError::Kind::not_found, "no session '" + id + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error&) {
    throw StoreError(StoreErrorCode::parse, "malformed session file", file_for(id).string());
  }
  Session s = session_from_json(j);
  std::lock_guard<std::mutex> guard(map_mutex_);
  cache_[id] = s;
  return s;
}

void SessionStore::put(const Session& session) {
  check_id(session.id);
  const auto file = file_for(session.id);
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw StoreError(StoreErrorCode::io, "cannot write " + tmp.string());
    out << session_to_json(session).dump(2) << '\n';
    if (!out) throw StoreError(StoreErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw StoreError(StoreErrorCode::io, "cannot replace " + file.string());
  std::lock_guard<std::mutex> guard(map_mutex_);
  cache_[session.id] = session;
}

std::vector<std::string> SessionStore::list() {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_))
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace casemix
