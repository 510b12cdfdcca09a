#include "casemix/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace casemix {

const char* to_string(ZoneKind kind) {
  switch (kind) {
    case ZoneKind::icu:
      return "icu";
    case ZoneKind::theatre:
      return "theatre";
    case ZoneKind::ward:
      return "ward";
  }
  return "ward";
}

std::optional<ZoneKind> parse_zone_kind(const std::string& text) {
  if (text == "icu") return ZoneKind::icu;
  if (text == "theatre") return ZoneKind::theatre;
  if (text == "ward") return ZoneKind::ward;
  return std::nullopt;
}

std::optional<std::size_t> Scenario::zone_index(const std::string& id) const {
  for (std::size_t w = 0; w < zones.size(); ++w)
    if (zones[w].id == id) return w;
  return std::nullopt;
}

std::optional<std::size_t> Scenario::type_index(const std::string& id) const {
  for (std::size_t g = 0; g < patient_types.size(); ++g)
    if (patient_types[g].id == id) return g;
  return std::nullopt;
}

std::optional<std::pair<std::size_t, std::size_t>> Scenario::sub_type_index(
    const std::string& id) const {
  for (std::size_t g = 0; g < patient_types.size(); ++g) {
    const auto& subs = patient_types[g].sub_types;
    for (std::size_t p = 0; p < subs.size(); ++p)
      if (subs[p].id == id) return std::make_pair(g, p);
  }
  return std::nullopt;
}

double Scenario::zone_capacity(std::size_t w) const {
  return static_cast<double>(periods) * zones[w].hours_per_period *
         static_cast<double>(zones[w].beds);
}

std::vector<double> Scenario::type_mix() const {
  std::vector<double> mu;
  mu.reserve(patient_types.size());
  for (const auto& t : patient_types) mu.push_back(t.mix_fraction);
  return mu;
}

double CaseMix::total() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

CaseMix SubMix::type_totals() const {
  CaseMix out;
  out.values.reserve(values.size());
  for (const auto& row : values) {
    double sum = 0.0;
    for (double v : row) sum += v;
    out.values.push_back(sum);
  }
  return out;
}

SubMix proportional_sub_mix(const Scenario& s, const CaseMix& mix) {
  SubMix out;
  for (std::size_t g = 0; g < s.patient_types.size(); ++g) {
    std::vector<double> row;
    for (const auto& st : s.patient_types[g].sub_types)
      row.push_back(st.mix_fraction * mix.values.at(g));
    out.values.push_back(std::move(row));
  }
  return out;
}

namespace {

constexpr double kFractionTolerance = 1e-9;

std::string type_path(const PatientType& t) {
  return "patient_types[" + t.id + "]";
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto add = [&out](std::string path, std::string message) {
    out.push_back({std::move(path), std::move(message)});
  };

  if (s.periods < 1) add("periods", "must be at least 1");
  if (s.patient_types.empty()) add("patient_types", "at least one patient type is required");

  std::set<std::string> zone_ids;
  for (const auto& z : s.zones) {
    const std::string path = "zones[" + z.id + "]";
    if (z.id.empty()) add("zones[]", "zone id must not be empty");
    if (!zone_ids.insert(z.id).second) add(path, "duplicate zone id");
    if (z.beds < 1) add(path + ".beds", "bed count must be at least 1");
    if (!(z.hours_per_period >= 0.0) || !std::isfinite(z.hours_per_period))
      add(path + ".hours_per_period", "hours must be finite and non-negative");
  }

  std::set<std::string> type_ids;
  std::set<std::string> sub_ids;
  double mix_total = 0.0;
  for (const auto& t : s.patient_types) {
    const std::string path = type_path(t);
    if (t.id.empty()) add("patient_types[]", "patient type id must not be empty");
    if (!type_ids.insert(t.id).second) add(path, "duplicate patient type id");
    if (!(t.mix_fraction >= 0.0 && t.mix_fraction <= 1.0))
      add(path + ".mix_fraction", "type " + t.id + ": mix fraction must lie in [0, 1]");
    mix_total += t.mix_fraction;
    if (t.upper_bound && !(*t.upper_bound >= 0.0))
      add(path + ".upper_bound", "type " + t.id + ": bound override must be non-negative");
    if (t.sub_types.empty()) {
      add(path + ".sub_types", "type " + t.id + " has no sub-types");
      continue;
    }

    double sub_total = 0.0;
    for (const auto& st : t.sub_types) {
      const std::string sp = path + ".sub_types[" + st.id + "]";
      if (!sub_ids.insert(st.id).second) add(sp, "duplicate sub-type id");
      if (!(st.mix_fraction >= 0.0 && st.mix_fraction <= 1.0))
        add(sp + ".mix_fraction", "sub-type " + st.id + ": mix fraction must lie in [0, 1]");
      sub_total += st.mix_fraction;
      if (st.pathway.empty()) add(sp + ".pathway", "sub-type " + st.id + " has no activities");
      for (std::size_t k = 0; k < st.pathway.size(); ++k) {
        const auto& a = st.pathway[k];
        const std::string ap = sp + ".pathway[" + std::to_string(k + 1) + "]";
        if (!(a.hours >= 0.0) || !std::isfinite(a.hours))
          add(ap + ".hours", "duration must be finite and non-negative");
        if (a.zones.empty()) add(ap + ".zones", "activity has no candidate zone");
        for (const auto& zid : a.zones) {
          auto w = s.zone_index(zid);
          if (!w) {
            add(ap + ".zones", "unknown zone '" + zid + "'");
          } else if (s.zones[*w].kind != a.kind) {
            add(ap + ".zones", "zone '" + zid + "' is a " + to_string(s.zones[*w].kind) +
                                   " but the activity needs a " + to_string(a.kind));
          }
        }
      }
    }
    if (std::abs(sub_total - 1.0) > kFractionTolerance)
      add(path + ".sub_types", "type " + t.id + ": sub-type fractions sum to " +
                                   std::to_string(sub_total) + ", expected 1");
  }
  if (mix_total > 1.0 + kFractionTolerance)
    add("patient_types", "type mix fractions sum to " + std::to_string(mix_total) +
                             ", more than 1");

  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) { return a.path < b.path; });
  return out;
}

void normalize_sub_mix(Scenario& s, double tolerance) {
  for (auto& t : s.patient_types) {
    double sum = 0.0;
    for (const auto& st : t.sub_types) sum += st.mix_fraction;
    if (sum > 0.0 && std::abs(sum - 1.0) <= tolerance)
      for (auto& st : t.sub_types) st.mix_fraction /= sum;
  }
}

Scenario scale_horizon(const Scenario& s, int factor) {
  if (factor < 1) throw PreconditionError("horizon factor must be at least 1");
  Scenario out = s;
  out.periods = s.periods * factor;
  for (auto& t : out.patient_types)
    if (t.upper_bound) *t.upper_bound *= factor;
  return out;
}

double effective_duration(const Scenario& s, const SubType& st, std::size_t activity) {
  const Activity& a = st.pathway.at(activity);
  if (!s.flags.beds_held_during_surgery || a.kind != ZoneKind::ward) return a.hours;
  for (std::size_t k = 0; k < st.pathway.size(); ++k) {
    if (st.pathway[k].kind != ZoneKind::ward) continue;
    if (k != activity) return a.hours;
    double theatre = 0.0;
    for (const auto& b : st.pathway)
      if (b.kind == ZoneKind::theatre) theatre += b.hours;
    return a.hours + theatre;
  }
  return a.hours;
}

}  // namespace casemix
