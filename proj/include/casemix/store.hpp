#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "casemix/alteration.hpp"
#include "casemix/capacity.hpp"
#include "casemix/mcdm.hpp"
#include "casemix/scenario.hpp"

namespace casemix {

enum class StoreErrorCode { parse, validation, io };

const char* to_string(StoreErrorCode code);

class StoreError : public std::runtime_error {
 public:
  StoreError(StoreErrorCode code, std::string message, std::string path = {},
             std::vector<Violation> violations = {});

  StoreErrorCode code() const { return code_; }
  // Field path (or "line N" for syntax errors) where the problem was found.
  const std::string& path() const { return path_; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  StoreErrorCode code_;
  std::string path_;
  std::vector<Violation> violations_;
};

// Computed bounds kept beside the scenario; valid while the fingerprint matches.
struct BoundsCache {
  std::string fingerprint;
  std::vector<double> type_bounds;
  std::vector<std::vector<double>> sub_type_bounds;
};

struct StoredScenario {
  Scenario scenario;
  std::string fingerprint;
  std::optional<BoundsCache> cache;

  bool cache_valid() const { return cache && cache->fingerprint == fingerprint; }
};

// Stable 64-bit FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string scenario_fingerprint(const Scenario& s);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// Parses, normalises sub-mix fractions and validates. Throws StoreError.
StoredScenario parse_scenario(const std::string& text);
StoredScenario load_scenario(const std::filesystem::path& file);
void save_scenario(const std::filesystem::path& file, const StoredScenario& stored);
std::string dump_scenario(const StoredScenario& stored);

// Fills the cache from bound analysis if it is missing or stale.
// Returns true when new bounds were computed.
bool ensure_bounds(StoredScenario& stored);
// Resolved bounds (overrides applied). Computes the cache when needed.
TypeBounds scenario_bounds(StoredScenario& stored);

// A case mix file: {"case_mix": [...], "sub_mix": [[...]]}; both optional.
struct MixFile {
  std::optional<CaseMix> case_mix;
  std::optional<SubMix> sub_mix;
};
MixFile load_mix_file(const std::filesystem::path& file);

// JSON forms shared by the CLI and the HTTP service.
nlohmann::json number_json(double v);  // +inf becomes "uncapped"
double number_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const CaseMix& m);
nlohmann::json to_json(const SubMix& m);
nlohmann::json to_json(const PlanResult& r);
nlohmann::json to_json(const AlterationResult& r);
nlohmann::json to_json(const CompareResult& r);
nlohmann::json to_json(const FeasibilityReport& r);
CaseMix case_mix_from_json(const nlohmann::json& j, const std::string& path);
SubMix sub_mix_from_json(const nlohmann::json& j, const std::string& path);
AlterationResult alteration_from_json(const nlohmann::json& j);

}  // namespace casemix
