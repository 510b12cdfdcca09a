#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "casemix/capacity.hpp"
#include "casemix/lp.hpp"
#include "casemix/scenario.hpp"

namespace casemix {

// How the other types absorb a forced change:
//   eq  - every other type moves by the same scaled amount λ (minimax),
//   lin - the sum of scaled moves is as small as possible,
//   ssq - the sum of squared scaled moves is as small as possible.
enum class Method { eq, lin, ssq };

const char* to_string(Method m);
std::optional<Method> parse_method(const std::string& text);

struct AlterationOptions {
  bool scaled = true;               // divide moves by the type (or sub-type) bound
  std::size_t breakpoints = 500;    // interior breakpoints of the x² approximation
  bool strict_eq = false;           // require every move to equal λ exactly
  std::size_t node_limit = 50000;   // branch-and-bound budget for ssq with δ < 0
};

struct AlterationRequest {
  std::size_t type = 0;
  double delta = 0.0;
  Method method = Method::eq;
  CaseMix baseline;
  AlterationOptions options;
};

struct SubtypeAlterationRequest {
  std::size_t type = 0;
  std::size_t sub_type = 0;
  double delta = 0.0;
  Method method = Method::eq;
  SubMix baseline;
  AlterationOptions options;
};

struct AlterationResult {
  LpStatus status = LpStatus::numerical_failure;
  std::string message;
  Method method = Method::eq;
  std::size_t type = 0;
  std::optional<std::size_t> sub_type;
  double delta = 0.0;

  CaseMix baseline;
  CaseMix new_mix;
  SubMix new_sub_mix;
  // Scaled move of every type away from its baseline, >= 0. Sub-type
  // alterations fill sub_gamma instead, one entry per sub-type.
  std::vector<double> gamma;
  std::vector<std::vector<double>> sub_gamma;
  double lambda = 0.0;
  // λ for eq, Σγ for lin, Σγ² for ssq.
  double objective = 0.0;
  double total = 0.0;
  double total_impact = 0.0;  // signed change of all other types together
  std::vector<AllocationEntry> allocation;
  std::vector<ZoneUse> utilization;
  // Set when the ssq search stopped at its node limit.
  bool approximate = false;
  std::vector<std::string> warnings;

  bool ok() const { return status == LpStatus::optimal; }
};

// Forces type `type` to baseline + delta and re-plans the others.
AlterationResult alter_type(const Scenario& s, const TypeBounds& bounds,
                            const AlterationRequest& request);

// Forces one sub-type to baseline + delta. Other sub-types of the same type
// may move freely; all other types keep their sub-mix.
AlterationResult alter_subtype(const Scenario& s, const TypeBounds& bounds,
                               const SubtypeAlterationRequest& request);

// One independent alteration per delta, in order. A delta outside the allowed
// range yields an infeasible row carrying the reason instead of throwing.
std::vector<AlterationResult> sweep(const Scenario& s, const TypeBounds& bounds,
                                    const AlterationRequest& base,
                                    const std::vector<double>& deltas);

}  // namespace casemix
