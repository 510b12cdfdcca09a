#include "casemix/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace casemix {

std::optional<OutputFormat> parse_output_format(const std::string& text) {
  if (text == "table") return OutputFormat::table;
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  return std::nullopt;
}

std::string format_number(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "uncapped" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // Avoid printing "-0.00".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool numeric(const std::string& s) {
  return !s.empty() && s.find_first_not_of("-+.0123456789e") == std::string::npos;
}

}  // namespace

std::string render(const TextTable& t, OutputFormat format) {
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
      out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out.str();
  }
  std::vector<std::size_t> width(t.header.size(), 0);
  for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = t.header[i].size();
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string c = i < cells.size() ? cells[i] : "";
      const std::string pad(width[i] - c.size(), ' ');
      if (i) out << "  ";
      out << (numeric(c) ? pad + c : c + pad);
    }
    out << '\n';
  };
  line(t.header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& r : t.rows) line(r);
  return out.str();
}

TextTable bounds_table(const Scenario& s, const std::vector<double>& bounds,
                       const std::vector<std::vector<double>>& sub_bounds) {
  TextTable t{{"type", "sub_type", "bound", "override"}, {}};
  for (std::size_t g = 0; g < s.type_count(); ++g) {
    const auto& pt = s.patient_types[g];
    t.rows.push_back({pt.id, "", format_number(bounds.at(g)),
                      pt.upper_bound ? format_number(*pt.upper_bound) : ""});
    if (g < sub_bounds.size() && pt.sub_types.size() > 1)
      for (std::size_t p = 0; p < pt.sub_types.size(); ++p)
        t.rows.push_back({pt.id, pt.sub_types[p].id, format_number(sub_bounds[g][p]), ""});
  }
  return t;
}

TextTable plan_table(const Scenario& s, const PlanResult& r) {
  TextTable t{{"type", "patients", "share_pct"}, {}};
  for (std::size_t g = 0; g < s.type_count(); ++g) {
    const double share = r.total > 0 ? 100.0 * r.case_mix[g] / r.total : 0.0;
    t.rows.push_back({s.patient_types[g].id, format_number(r.case_mix[g]), format_number(share, 1)});
  }
  t.rows.push_back({"total", format_number(r.total), "100.0"});
  return t;
}

TextTable utilization_table(const std::vector<ZoneUse>& use) {
  TextTable t{{"zone", "hours", "capacity", "utilization_pct"}, {}};
  for (const auto& z : use)
    t.rows.push_back({z.zone, format_number(z.hours), format_number(z.capacity),
                      format_number(100.0 * z.utilization)});
  return t;
}

TextTable alteration_table(const Scenario& s, const std::vector<AlterationResult>& results) {
  TextTable t;
  t.header = {"type", "delta", "method", "status"};
  for (const auto& pt : s.patient_types) t.header.push_back(pt.id);
  t.header.insert(t.header.end(), {"total", "impact", "objective"});
  for (const auto& r : results) {
    std::string who = s.patient_types.at(r.type).id;
    if (r.sub_type) who = s.patient_types[r.type].sub_types.at(*r.sub_type).id;
    std::vector<std::string> row{who, format_number(r.delta), to_string(r.method),
                                 r.approximate ? "approximate" : to_string(r.status)};
    for (std::size_t g = 0; g < s.type_count(); ++g)
      row.push_back(r.ok() ? format_number(r.new_mix[g]) : "");
    row.push_back(r.ok() ? format_number(r.total) : "");
    row.push_back(r.ok() ? format_number(r.total_impact) : "");
    row.push_back(r.ok() ? format_number(r.objective, 4) : "");
    t.rows.push_back(std::move(row));
  }
  return t;
}

TextTable alteration_detail_table(const Scenario& s, const AlterationResult& r) {
  TextTable t{{"type", "before", "after", "change", "gamma"}, {}};
  if (!r.ok()) return t;
  double before = 0.0;
  for (std::size_t g = 0; g < s.type_count(); ++g) {
    before += r.baseline[g];
    const double gamma = g < r.gamma.size() ? r.gamma[g] : 0.0;
    t.rows.push_back({s.patient_types[g].id, format_number(r.baseline[g]), format_number(r.new_mix[g]),
                      format_number(r.new_mix[g] - r.baseline[g]), format_number(gamma, 4)});
  }
  t.rows.push_back({"total", format_number(before), format_number(r.total), format_number(r.total - before), ""});
  t.rows.push_back({"impact", "", "", format_number(r.total_impact), ""});
  t.rows.push_back({r.method == Method::eq ? "lambda" : "objective", "", "",
                    format_number(r.method == Method::eq ? r.lambda : r.objective, 4), ""});
  return t;
}

TextTable compare_table(const Scenario& s, const CaseMix& a, const CaseMix& b, const CompareResult& r,
                        const std::vector<double>& epsilon) {
  TextTable t{{"type", "A", "B", "diff", "scaled", "SQ", "significant"}, {}};
  for (std::size_t g = 0; g < r.deltas.size(); ++g) {
    const std::string id = g < s.type_count() ? s.patient_types[g].id : std::to_string(g + 1);
    const double diff = b[g] - a[g];
    const bool flag = g < epsilon.size() && std::abs(diff) > epsilon[g];
    t.rows.push_back({id, format_number(a[g]), format_number(b[g]), format_number(diff),
                      format_number(r.deltas[g], 4), format_number(r.deltas[g] * r.deltas[g], 4),
                      flag ? "(*)" : ""});
  }
  t.rows.push_back({"gain", "", "", "", format_number(r.gain_norm, 4), "", ""});
  t.rows.push_back({"loss", "", "", "", format_number(r.loss_norm, 4), "", ""});
  t.rows.push_back({"ratio", "", "", "", r.ratio ? format_number(*r.ratio, 4) : "undefined", "",
                    to_string(r.verdict)});
  return t;
}

}  // namespace casemix
