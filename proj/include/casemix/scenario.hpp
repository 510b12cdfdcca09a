#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace casemix {

// Raised when a caller breaks a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ZoneKind { icu, theatre, ward };

const char* to_string(ZoneKind kind);
std::optional<ZoneKind> parse_zone_kind(const std::string& text);

// A pool of identical beds or theatres.
struct Zone {
  std::string id;
  ZoneKind kind = ZoneKind::ward;
  int beds = 0;
  double hours_per_period = 0.0;
};

// One step of a care pathway. `zones` lists the candidate zones by id; the
// activity may be split across them.
struct Activity {
  ZoneKind kind = ZoneKind::ward;
  double hours = 0.0;
  std::vector<std::string> zones;
};

struct SubType {
  std::string id;
  double mix_fraction = 0.0;
  std::vector<Activity> pathway;
};

struct PatientType {
  std::string id;
  double mix_fraction = 0.0;
  std::vector<SubType> sub_types;
  std::optional<double> upper_bound;  // replaces the computed bound when set
};

struct ScenarioFlags {
  // Ward beds are acquired before surgery and held while in theatre.
  bool beds_held_during_surgery = true;
};

struct Scenario {
  std::string name;
  std::string description;
  int periods = 1;
  ScenarioFlags flags;
  std::vector<Zone> zones;
  std::vector<PatientType> patient_types;

  std::size_t type_count() const { return patient_types.size(); }
  std::optional<std::size_t> zone_index(const std::string& id) const;
  std::optional<std::size_t> type_index(const std::string& id) const;
  // Returns the (type, sub-type) position of a sub-type id.
  std::optional<std::pair<std::size_t, std::size_t>> sub_type_index(
      const std::string& id) const;

  // Hours available in zone `w` over the whole horizon.
  double zone_capacity(std::size_t w) const;
  std::vector<double> type_mix() const;
};

// Number of patients per type (n¹) or per sub-type (n²).
struct CaseMix {
  std::vector<double> values;

  double total() const;
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

struct SubMix {
  std::vector<std::vector<double>> values;

  CaseMix type_totals() const;
  double total() const { return type_totals().total(); }
};

// Sub-mix implied by distributing each type total by its sub-type fractions.
SubMix proportional_sub_mix(const Scenario& s, const CaseMix& mix);

struct Violation {
  std::string path;
  std::string message;
};

// Every rule the scenario breaks, sorted by field path.
std::vector<Violation> validate_scenario(const Scenario& s);

// Rescales sub-type fractions that sum to 1 within `tolerance` so they sum to
// exactly 1. Larger deviations are left for validation to report.
void normalize_sub_mix(Scenario& s, double tolerance = 1e-6);

// Copy of `s` planned over `factor` times as many periods (a one-week scenario
// scaled by 8 covers eight weeks). Bound overrides scale by the same factor.
Scenario scale_horizon(const Scenario& s, int factor);

// Duration an activity occupies its zone. With beds held during surgery the
// first ward activity of a pathway also carries the sub-type's theatre hours.
double effective_duration(const Scenario& s, const SubType& st,
                          std::size_t activity);

}  // namespace casemix
