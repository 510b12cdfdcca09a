#pragma once

#include <optional>
#include <string>
#include <vector>

#include "casemix/alteration.hpp"
#include "casemix/capacity.hpp"
#include "casemix/mcdm.hpp"

namespace casemix {

enum class OutputFormat { table, csv, json };

std::optional<OutputFormat> parse_output_format(const std::string& text);

// Values are shown rounded to `decimals`; the solver output keeps full precision.
std::string format_number(double v, int decimals = 2);

struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string render(const TextTable& t, OutputFormat format);

TextTable bounds_table(const Scenario& s, const std::vector<double>& bounds,
                       const std::vector<std::vector<double>>& sub_bounds);
TextTable plan_table(const Scenario& s, const PlanResult& r);
TextTable utilization_table(const std::vector<ZoneUse>& use);
// One row per alteration, in the layout planners read sweeps in.
TextTable alteration_table(const Scenario& s, const std::vector<AlterationResult>& results);
// Before, after and change per type for a single alteration.
TextTable alteration_detail_table(const Scenario& s, const AlterationResult& r);
// Per-type A, B, difference, scaled difference and its square. A "(*)" marks
// types whose difference exceeds ε.
TextTable compare_table(const Scenario& s, const CaseMix& a, const CaseMix& b, const CompareResult& r,
                        const std::vector<double>& epsilon);

}  // namespace casemix
