#include "casemix/store.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace casemix {

using nlohmann::json;

const char* to_string(StoreErrorCode code) {
  switch (code) {
    case StoreErrorCode::parse:
      return "parse";
    case StoreErrorCode::validation:
      return "validation";
    case StoreErrorCode::io:
      return "io";
  }
  return "io";
}

StoreError::StoreError(StoreErrorCode code, std::string message, std::string path,
                       std::vector<Violation> violations)
    : std::runtime_error(path.empty() ? message : path + ": " + message),
      code_(code),
      path_(std::move(path)),
      violations_(std::move(violations)) {}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw StoreError(StoreErrorCode::parse, message, path);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing field");
  return *it;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

ZoneKind get_kind(const json& j, const std::string& path) {
  auto kind = parse_zone_kind(get_string(j, path));
  if (!kind) fail(path, "expected one of icu, theatre, ward");
  return *kind;
}

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::vector<double> number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  const json& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number_from_json(arr[i], indexed(path, i)));
  return out;
}

}  // namespace

json number_json(double v) {
  if (std::isinf(v) && v > 0.0) return "uncapped";
  return v;
}

double number_from_json(const json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "uncapped") return kInfinity;
  return get_number(j, path);
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) fail("$", "scenario must be a JSON object");
  Scenario s;
  if (j.contains("name")) s.name = get_string(j["name"], "name");
  if (j.contains("description")) s.description = get_string(j["description"], "description");
  if (j.contains("periods")) s.periods = get_int(j["periods"], "periods");
  if (j.contains("flags")) {
    const json& f = j["flags"];
    if (!f.is_object()) fail("flags", "expected an object");
    if (f.contains("beds_held_during_surgery"))
      s.flags.beds_held_during_surgery =
          get_bool(f["beds_held_during_surgery"], "flags.beds_held_during_surgery");
  }

  const json& zones = get_array(field(j, "zones", "$"), "zones");
  for (std::size_t w = 0; w < zones.size(); ++w) {
    const std::string p = indexed("zones", w);
    Zone z;
    z.id = get_string(field(zones[w], "id", p), p + ".id");
    z.kind = get_kind(field(zones[w], "kind", p), p + ".kind");
    z.beds = get_int(field(zones[w], "beds", p), p + ".beds");
    z.hours_per_period = get_number(field(zones[w], "hours_per_period", p), p + ".hours_per_period");
    s.zones.push_back(std::move(z));
  }

  const json& types = get_array(field(j, "patient_types", "$"), "patient_types");
  for (std::size_t g = 0; g < types.size(); ++g) {
    const std::string p = indexed("patient_types", g);
    const json& tj = types[g];
    PatientType t;
    t.id = get_string(field(tj, "id", p), p + ".id");
    if (tj.contains("mix_fraction")) t.mix_fraction = get_number(tj["mix_fraction"], p + ".mix_fraction");
    if (tj.contains("upper_bound") && !tj["upper_bound"].is_null())
      t.upper_bound = get_number(tj["upper_bound"], p + ".upper_bound");
    const json& subs = get_array(field(tj, "sub_types", p), p + ".sub_types");
    for (std::size_t q = 0; q < subs.size(); ++q) {
      const std::string sp = indexed(p + ".sub_types", q);
      SubType st;
      st.id = get_string(field(subs[q], "id", sp), sp + ".id");
      st.mix_fraction = get_number(field(subs[q], "mix_fraction", sp), sp + ".mix_fraction");
      const json& path = get_array(field(subs[q], "pathway", sp), sp + ".pathway");
      for (std::size_t k = 0; k < path.size(); ++k) {
        const std::string ap = indexed(sp + ".pathway", k);
        Activity a;
        a.kind = get_kind(field(path[k], "kind", ap), ap + ".kind");
        a.hours = get_number(field(path[k], "hours", ap), ap + ".hours");
        const json& zs = get_array(field(path[k], "zones", ap), ap + ".zones");
        for (std::size_t i = 0; i < zs.size(); ++i) a.zones.push_back(get_string(zs[i], indexed(ap + ".zones", i)));
        st.pathway.push_back(std::move(a));
      }
      t.sub_types.push_back(std::move(st));
    }
    s.patient_types.push_back(std::move(t));
  }
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["periods"] = s.periods;
  j["flags"] = {{"beds_held_during_surgery", s.flags.beds_held_during_surgery}};
  j["zones"] = json::array();
  for (const auto& z : s.zones)
    j["zones"].push_back({{"id", z.id}, {"kind", to_string(z.kind)}, {"beds", z.beds},
                          {"hours_per_period", z.hours_per_period}});
  j["patient_types"] = json::array();
  for (const auto& t : s.patient_types) {
    json tj = {{"id", t.id}, {"mix_fraction", t.mix_fraction}};
    tj["upper_bound"] = t.upper_bound ? json(*t.upper_bound) : json(nullptr);
    tj["sub_types"] = json::array();
    for (const auto& st : t.sub_types) {
      json sj = {{"id", st.id}, {"mix_fraction", st.mix_fraction}, {"pathway", json::array()}};
      for (const auto& a : st.pathway)
        sj["pathway"].push_back({{"kind", to_string(a.kind)}, {"hours", a.hours}, {"zones", a.zones}});
      tj["sub_types"].push_back(std::move(sj));
    }
    j["patient_types"].push_back(std::move(tj));
  }
  return j;
}

std::string scenario_fingerprint(const Scenario& s) {
  const std::string canonical = scenario_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

StoredScenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw StoreError(StoreErrorCode::parse, "malformed JSON", "line " + std::to_string(line));
  }

  StoredScenario out;
  out.scenario = scenario_from_json(j);
  normalize_sub_mix(out.scenario);
  auto violations = validate_scenario(out.scenario);
  if (!violations.empty()) {
    std::string msg = violations.front().message;
    if (violations.size() > 1) msg += " (and " + std::to_string(violations.size() - 1) + " more)";
    throw StoreError(StoreErrorCode::validation, msg, violations.front().path, violations);
  }
  out.fingerprint = scenario_fingerprint(out.scenario);

  if (j.contains("cache") && j["cache"].is_object()) {
    const json& c = j["cache"];
    BoundsCache cache;
    cache.fingerprint = get_string(field(c, "fingerprint", "cache"), "cache.fingerprint");
    cache.type_bounds = number_list(field(c, "type_bounds", "cache"), "cache.type_bounds");
    const json& subs = get_array(field(c, "sub_type_bounds", "cache"), "cache.sub_type_bounds");
    for (std::size_t g = 0; g < subs.size(); ++g)
      cache.sub_type_bounds.push_back(number_list(subs[g], indexed("cache.sub_type_bounds", g)));
    out.cache = std::move(cache);
  }
  return out;
}

StoredScenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw StoreError(StoreErrorCode::io, "cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw StoreError(StoreErrorCode::io, "cannot read " + file.string());
  return parse_scenario(buf.str());
}

std::string dump_scenario(const StoredScenario& stored) {
  json j = scenario_to_json(stored.scenario);
  if (stored.cache) {
    json subs = json::array();
    for (const auto& row : stored.cache->sub_type_bounds) {
      json r = json::array();
      for (double v : row) r.push_back(number_json(v));
      subs.push_back(std::move(r));
    }
    json types = json::array();
    for (double v : stored.cache->type_bounds) types.push_back(number_json(v));
    j["cache"] = {{"fingerprint", stored.cache->fingerprint},
                  {"type_bounds", types},
                  {"sub_type_bounds", subs}};
  }
  return j.dump(2) + "\n";
}

void save_scenario(const std::filesystem::path& file, const StoredScenario& stored) {
  const std::string text = dump_scenario(stored);
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw StoreError(StoreErrorCode::io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw StoreError(StoreErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw StoreError(StoreErrorCode::io, "cannot replace " + file.string() + ": " + ec.message());
}

bool ensure_bounds(StoredScenario& stored) {
  if (stored.cache_valid() && stored.cache->type_bounds.size() == stored.scenario.type_count())
    return false;
  BoundsCache cache;
  cache.fingerprint = stored.fingerprint;
  cache.type_bounds = bound_analysis(stored.scenario).bounds;
  cache.sub_type_bounds = subtype_bounds(stored.scenario);
  stored.cache = std::move(cache);
  return true;
}

TypeBounds scenario_bounds(StoredScenario& stored) {
  ensure_bounds(stored);
  return resolve_bounds(stored.scenario, stored.cache->type_bounds, stored.cache->sub_type_bounds);
}

CaseMix case_mix_from_json(const json& j, const std::string& path) {
  return CaseMix{number_list(j, path)};
}

SubMix sub_mix_from_json(const json& j, const std::string& path) {
  SubMix m;
  const json& rows = get_array(j, path);
  for (std::size_t g = 0; g < rows.size(); ++g) m.values.push_back(number_list(rows[g], indexed(path, g)));
  return m;
}

MixFile load_mix_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw StoreError(StoreErrorCode::io, "cannot open " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw StoreError(StoreErrorCode::parse, "malformed JSON at byte " + std::to_string(e.byte),
                     file.string());
  }
  MixFile out;
  if (j.is_array()) {
    out.case_mix = case_mix_from_json(j, "$");
    return out;
  }
  if (j.contains("case_mix")) out.case_mix = case_mix_from_json(j["case_mix"], "case_mix");
  if (j.contains("sub_mix")) out.sub_mix = sub_mix_from_json(j["sub_mix"], "sub_mix");
  if (!out.case_mix && !out.sub_mix)
    throw StoreError(StoreErrorCode::parse, "expected case_mix or sub_mix", file.string());
  return out;
}

json to_json(const CaseMix& m) {
  json out = json::array();
  for (double v : m.values) out.push_back(number_json(v));
  return out;
}

json to_json(const SubMix& m) {
  json out = json::array();
  for (const auto& row : m.values) {
    json r = json::array();
    for (double v : row) r.push_back(number_json(v));
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

json allocation_json(const std::vector<AllocationEntry>& alloc) {
  json out = json::array();
  for (const auto& a : alloc)
    out.push_back({{"type", a.type}, {"sub_type", a.sub_type}, {"activity", a.activity},
                   {"zone", a.zone}, {"patients", a.patients}});
  return out;
}

json utilization_json(const std::vector<ZoneUse>& use) {
  json out = json::array();
  for (const auto& z : use)
    out.push_back({{"zone", z.zone}, {"hours", z.hours}, {"capacity", z.capacity},
                   {"utilization", z.utilization}});
  return out;
}

std::vector<AllocationEntry> allocation_from_json(const json& j) {
  std::vector<AllocationEntry> out;
  for (const auto& a : get_array(j, "allocation"))
    out.push_back({a.at("type").get<std::string>(), a.at("sub_type").get<std::string>(),
                   a.at("activity").get<std::size_t>(), a.at("zone").get<std::string>(),
                   a.at("patients").get<double>()});
  return out;
}

std::vector<ZoneUse> utilization_from_json(const json& j) {
  std::vector<ZoneUse> out;
  for (const auto& z : get_array(j, "utilization"))
    out.push_back({z.at("zone").get<std::string>(), z.at("hours").get<double>(),
                   z.at("capacity").get<double>(), z.at("utilization").get<double>()});
  return out;
}

LpStatus status_from_string(const std::string& s) {
  for (LpStatus st : {LpStatus::optimal, LpStatus::infeasible, LpStatus::unbounded,
                      LpStatus::numerical_failure})
    if (s == to_string(st)) return st;
  fail("status", "unknown status " + s);
}

}  // namespace

json to_json(const PlanResult& r) {
  json j = {{"status", to_string(r.status)}};
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.ok()) return j;
  j["case_mix"] = to_json(r.case_mix);
  j["sub_mix"] = to_json(r.sub_mix);
  j["total"] = r.total;
  j["allocation"] = allocation_json(r.allocation);
  j["utilization"] = utilization_json(r.utilization);
  return j;
}

json to_json(const AlterationResult& r) {
  json j = {{"status", to_string(r.status)},
            {"method", to_string(r.method)},
            {"type", r.type},
            {"delta", r.delta},
            {"baseline", to_json(r.baseline)},
            {"approximate", r.approximate},
            {"warnings", r.warnings}};
  if (r.sub_type) j["sub_type"] = *r.sub_type;
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.ok()) return j;
  j["new_mix"] = to_json(r.new_mix);
  j["new_sub_mix"] = to_json(r.new_sub_mix);
  if (!r.gamma.empty()) j["gamma"] = r.gamma;
  if (!r.sub_gamma.empty()) j["sub_gamma"] = r.sub_gamma;
  j["lambda"] = r.lambda;
  j["objective"] = r.objective;
  j["total"] = r.total;
  j["total_impact"] = r.total_impact;
  j["allocation"] = allocation_json(r.allocation);
  j["utilization"] = utilization_json(r.utilization);
  return j;
}

AlterationResult alteration_from_json(const json& j) {
  AlterationResult r;
  try {
    r.status = status_from_string(j.at("status").get<std::string>());
    auto m = parse_method(j.at("method").get<std::string>());
    if (!m) fail("method", "unknown method");
    r.method = *m;
    r.type = j.at("type").get<std::size_t>();
    r.delta = j.at("delta").get<double>();
    r.baseline = case_mix_from_json(j.at("baseline"), "baseline");
    r.approximate = j.value("approximate", false);
    r.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("sub_type")) r.sub_type = j["sub_type"].get<std::size_t>();
    r.message = j.value("message", std::string{});
    if (!r.ok()) return r;
    r.new_mix = case_mix_from_json(j.at("new_mix"), "new_mix");
    r.new_sub_mix = sub_mix_from_json(j.at("new_sub_mix"), "new_sub_mix");
    r.gamma = j.value("gamma", std::vector<double>{});
    r.sub_gamma = j.value("sub_gamma", std::vector<std::vector<double>>{});
    r.lambda = j.at("lambda").get<double>();
    r.objective = j.at("objective").get<double>();
    r.total = j.at("total").get<double>();
    r.total_impact = j.at("total_impact").get<double>();
    r.allocation = allocation_from_json(j.at("allocation"));
    r.utilization = utilization_from_json(j.at("utilization"));
  } catch (const json::exception& e) {
    fail("alteration", e.what());
  }
  return r;
}

json to_json(const CompareResult& r) {
  return {{"deltas", r.deltas},
          {"gains", r.gains},
          {"losses", r.losses},
          {"gain_norm", r.gain_norm},
          {"loss_norm", r.loss_norm},
          {"ratio", r.ratio ? json(*r.ratio) : json(nullptr)},
          {"verdict", to_string(r.verdict)},
          {"significant", r.significant}};
}

json to_json(const FeasibilityReport& r) {
  json j = {{"feasible", r.feasible}, {"violated", r.violated}};
  if (r.plan.ok()) {
    j["allocation"] = allocation_json(r.plan.allocation);
    j["utilization"] = utilization_json(r.plan.utilization);
  }
  return j;
}

}  // namespace casemix
