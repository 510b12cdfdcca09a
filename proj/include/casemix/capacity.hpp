#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "casemix/lp.hpp"
#include "casemix/scenario.hpp"

namespace casemix {

struct AllocationVar {
  std::size_t type = 0;
  std::size_t sub_type = 0;
  std::size_t activity = 0;
  std::size_t zone = 0;
  double hours = 0.0;  // effective duration in this zone
  VarId var;
};

struct CmpOptions {
  // Type mix fractions. When empty the minimum-share rows are left out.
  std::vector<double> type_mix;
  // Keep every sub-type at or above its fraction of the type total.
  bool sub_mix_adherence = true;
  // Types exempt from sub-mix adherence (indexed by type; may be empty).
  std::vector<bool> free_sub_mix;
  // Cap each type by its bound override when the scenario has one.
  bool apply_overrides = true;
};

// The capacity LP: patient counts per type and sub-type, allocation of each
// activity to its candidate zones, and zone hour limits. The objective is left
// empty for the caller.
struct CmpModel {
  LinearProgram lp;
  std::vector<VarId> n1;
  std::vector<std::vector<VarId>> n2;
  std::vector<AllocationVar> alloc;
  VarId total;  // equals Σ n1
};

CmpModel build_cmp_model(const Scenario& s, const CmpOptions& options = {});

struct AllocationEntry {
  std::string type;
  std::string sub_type;
  std::size_t activity = 0;  // 1-based position in the pathway
  std::string zone;
  double patients = 0.0;
};

struct ZoneUse {
  std::string zone;
  double hours = 0.0;
  double capacity = 0.0;
  double utilization = 0.0;  // fraction of capacity, 0..1
};

struct PlanResult {
  LpStatus status = LpStatus::numerical_failure;
  std::string message;
  CaseMix case_mix;
  SubMix sub_mix;
  double total = 0.0;
  std::vector<AllocationEntry> allocation;
  std::vector<ZoneUse> utilization;

  bool ok() const { return status == LpStatus::optimal; }
};

// Reads counts, allocation and zone use out of a solved capacity model.
PlanResult extract_plan(const Scenario& s, const CmpModel& model, const LpSolution& sol);

// Maximises total patients. `type_mix` may be empty to drop the share rows;
// otherwise it must have one entry per type with each in [0, 1] and Σ <= 1.
PlanResult max_throughput(const Scenario& s, const std::vector<double>& type_mix);

struct BoundAnalysis {
  std::vector<double> bounds;             // +inf marks an uncapped type
  std::vector<std::string> diagnostics;   // empty string when the solve was clean
};

using BoundCallback = std::function<void(std::size_t type, double bound)>;

// Largest count of each type when it is the only type admitted. `on_bound` is
// called as each type finishes.
BoundAnalysis bound_analysis(const Scenario& s, const BoundCallback& on_bound = {});

// Largest count of each sub-type when it makes up all of its type.
std::vector<std::vector<double>> subtype_bounds(const Scenario& s);

// Bounds used for scaling: the override when present, else the computed one.
struct TypeBounds {
  std::vector<double> type;
  std::vector<std::vector<double>> sub_type;
};

TypeBounds resolve_bounds(const Scenario& s, const std::vector<double>& computed,
                          const std::vector<std::vector<double>>& computed_sub);
TypeBounds resolve_bounds(const Scenario& s);

struct FeasibilityReport {
  bool feasible = false;
  PlanResult plan;  // allocation when feasible, least-overflow allocation otherwise
  std::vector<std::string> violated;
};

// Can `mix` be treated with sub-types in their scenario proportions?
FeasibilityReport check_feasibility(const Scenario& s, const CaseMix& mix);

std::vector<ZoneUse> report_utilization(const Scenario& s,
                                        const std::vector<AllocationEntry>& allocation);

}  // namespace casemix
