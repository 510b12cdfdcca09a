#include "casemix/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace casemix {

CmpModel build_cmp_model(const Scenario& s, const CmpOptions& options) {
  const std::size_t G = s.type_count();
  if (!options.type_mix.empty() && options.type_mix.size() != G)
    throw PreconditionError("type mix has " + std::to_string(options.type_mix.size()) +
                            " entries for " + std::to_string(G) + " types");

  CmpModel m;
  LinearProgram& lp = m.lp;

  for (const auto& t : s.patient_types) {
    double upper = kInfinity;
    if (options.apply_overrides && t.upper_bound) upper = *t.upper_bound;
    m.n1.push_back(lp.add_variable("n_" + t.id, 0.0, upper));
  }
  m.total = lp.add_variable("total");
  for (const auto& t : s.patient_types) {
    std::vector<VarId> row;
    for (const auto& st : t.sub_types) row.push_back(lp.add_variable("n_" + st.id));
    m.n2.push_back(std::move(row));
  }

  std::vector<std::vector<Term>> zone_terms(s.zones.size());
  for (std::size_t g = 0; g < G; ++g) {
    const auto& t = s.patient_types[g];
    for (std::size_t p = 0; p < t.sub_types.size(); ++p) {
      const auto& st = t.sub_types[p];
      for (std::size_t k = 0; k < st.pathway.size(); ++k) {
        const auto& a = st.pathway[k];
        const double hours = effective_duration(s, st, k);
        std::vector<Term> split{{m.n2[g][p], 1.0}};
        for (const auto& zid : a.zones) {
          auto w = s.zone_index(zid);
          if (!w) throw PreconditionError("activity of " + st.id + " names unknown zone " + zid);
          VarId v = lp.add_variable("a_" + st.id + "_" + std::to_string(k + 1) + "_" + zid);
          m.alloc.push_back({g, p, k, *w, hours, v});
          split.push_back({v, -1.0});
          if (hours != 0.0) zone_terms[*w].push_back({v, hours});
        }
        lp.add_constraint(split, Relation::equal, 0.0,
                          "route_" + st.id + "_" + std::to_string(k + 1));
      }
    }
  }

  for (std::size_t g = 0; g < G; ++g) {
    std::vector<Term> row{{m.n1[g], 1.0}};
    for (VarId v : m.n2[g]) row.push_back({v, -1.0});
    lp.add_constraint(row, Relation::equal, 0.0, "split_" + s.patient_types[g].id);
  }
  {
    std::vector<Term> row{{m.total, 1.0}};
    for (VarId v : m.n1) row.push_back({v, -1.0});
    lp.add_constraint(row, Relation::equal, 0.0, "total");
  }

  for (std::size_t w = 0; w < s.zones.size(); ++w) {
    if (zone_terms[w].empty()) continue;
    lp.add_constraint(zone_terms[w], Relation::less_equal, s.zone_capacity(w),
                      "hours_" + s.zones[w].id);
  }

  if (!options.type_mix.empty()) {
    for (std::size_t g = 0; g < G; ++g) {
      const double mu = options.type_mix[g];
      if (mu == 0.0) continue;
      lp.add_constraint({{m.n1[g], 1.0}, {m.total, -mu}}, Relation::greater_equal, 0.0,
                        "share_" + s.patient_types[g].id);
    }
  }

  if (options.sub_mix_adherence) {
    for (std::size_t g = 0; g < G; ++g) {
      if (g < options.free_sub_mix.size() && options.free_sub_mix[g]) continue;
      const auto& t = s.patient_types[g];
      for (std::size_t p = 0; p < t.sub_types.size(); ++p) {
        const double mu = t.sub_types[p].mix_fraction;
        if (mu == 0.0) continue;
        lp.add_constraint({{m.n2[g][p], 1.0}, {m.n1[g], -mu}}, Relation::greater_equal, 0.0,
                          "submix_" + t.sub_types[p].id);
      }
    }
  }
  return m;
}

std::vector<ZoneUse> report_utilization(const Scenario& s,
                                        const std::vector<AllocationEntry>& allocation) {
  std::vector<ZoneUse> out;
  for (std::size_t w = 0; w < s.zones.size(); ++w)
    out.push_back({s.zones[w].id, 0.0, s.zone_capacity(w), 0.0});
  for (const auto& e : allocation) {
    auto g = s.type_index(e.type);
    auto gp = s.sub_type_index(e.sub_type);
    auto w = s.zone_index(e.zone);
    if (!g || !gp || !w || e.activity == 0)
      throw PreconditionError("allocation entry does not match the scenario");
    const auto& st = s.patient_types[gp->first].sub_types[gp->second];
    if (e.activity > st.pathway.size())
      throw PreconditionError("allocation entry names a missing activity of " + e.sub_type);
    out[*w].hours += e.patients * effective_duration(s, st, e.activity - 1);
  }
  for (auto& z : out) z.utilization = z.capacity > 0.0 ? z.hours / z.capacity : 0.0;
  return out;
}

PlanResult extract_plan(const Scenario& s, const CmpModel& model, const LpSolution& sol) {
  PlanResult r;
  r.status = sol.status;
  r.message = sol.message;
  if (!sol.optimal()) return r;
  for (VarId v : model.n1) r.case_mix.values.push_back(sol.value(v));
  for (const auto& row : model.n2) {
    std::vector<double> vals;
    for (VarId v : row) vals.push_back(sol.value(v));
    r.sub_mix.values.push_back(std::move(vals));
  }
  r.total = r.case_mix.total();
  for (const auto& a : model.alloc) {
    const double n = sol.value(a.var);
    if (n <= 0.0) continue;
    const auto& t = s.patient_types[a.type];
    r.allocation.push_back({t.id, t.sub_types[a.sub_type].id, a.activity + 1, s.zones[a.zone].id, n});
  }
  r.utilization = report_utilization(s, r.allocation);
  return r;
}

namespace {

void check_type_mix(const Scenario& s, const std::vector<double>& mix) {
  if (mix.empty()) return;
  if (mix.size() != s.type_count())
    throw PreconditionError("type mix needs one fraction per patient type");
  double sum = 0.0;
  for (double mu : mix) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw PreconditionError("type mix fractions must lie in [0, 1]");
    sum += mu;
  }
  if (sum > 1.0 + 1e-9) throw PreconditionError("type mix fractions sum to more than 1");
}

}  // namespace

PlanResult max_throughput(const Scenario& s, const std::vector<double>& type_mix) {
  check_type_mix(s, type_mix);
  CmpOptions opt;
  opt.type_mix = type_mix;
  CmpModel m = build_cmp_model(s, opt);
  m.lp.set_sense(Sense::maximize);
  m.lp.set_objective(m.total, 1.0);
  return extract_plan(s, m, solve_lp(m.lp));
}

BoundAnalysis bound_analysis(const Scenario& s, const BoundCallback& on_bound) {
  const std::size_t G = s.type_count();
  BoundAnalysis out;
  for (std::size_t g = 0; g < G; ++g) {
    CmpOptions opt;
    opt.apply_overrides = false;
    CmpModel m = build_cmp_model(s, opt);
    for (std::size_t h = 0; h < G; ++h)
      if (h != g) m.lp.set_bounds(m.n1[h], 0.0, 0.0);
    m.lp.set_sense(Sense::maximize);
    m.lp.set_objective(m.n1[g], 1.0);
    LpSolution sol = solve_lp(m.lp);
    double bound = 0.0;
    std::string diagnostic;
    switch (sol.status) {
      case LpStatus::optimal:
        bound = sol.value(m.n1[g]);
        break;
      case LpStatus::unbounded:
        bound = kInfinity;
        diagnostic = "uncapped: no activity of this type uses finite capacity";
        break;
      default:
        diagnostic = std::string("solver reported ") + to_string(sol.status) +
                     (sol.message.empty() ? "" : ": " + sol.message);
        break;
    }
    out.bounds.push_back(bound);
    out.diagnostics.push_back(diagnostic);
    if (on_bound) on_bound(g, bound);
  }
  return out;
}

std::vector<std::vector<double>> subtype_bounds(const Scenario& s) {
  const std::size_t G = s.type_count();
  std::vector<std::vector<double>> out(G);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t p = 0; p < s.patient_types[g].sub_types.size(); ++p) {
      Scenario only = s;
      for (std::size_t q = 0; q < only.patient_types[g].sub_types.size(); ++q)
        only.patient_types[g].sub_types[q].mix_fraction = q == p ? 1.0 : 0.0;
      CmpOptions opt;
      opt.apply_overrides = false;
      CmpModel m = build_cmp_model(only, opt);
      for (std::size_t h = 0; h < G; ++h)
        if (h != g) m.lp.set_bounds(m.n1[h], 0.0, 0.0);
      m.lp.set_sense(Sense::maximize);
      m.lp.set_objective(m.n2[g][p], 1.0);
      LpSolution sol = solve_lp(m.lp);
      double bound = 0.0;
      if (sol.optimal()) bound = sol.value(m.n2[g][p]);
      if (sol.status == LpStatus::unbounded) bound = kInfinity;
      out[g].push_back(bound);
    }
  }
  return out;
}

TypeBounds resolve_bounds(const Scenario& s, const std::vector<double>& computed,
                          const std::vector<std::vector<double>>& computed_sub) {
  TypeBounds b;
  b.type = computed;
  b.sub_type = computed_sub;
  for (std::size_t g = 0; g < s.type_count() && g < b.type.size(); ++g)
    if (s.patient_types[g].upper_bound) b.type[g] = *s.patient_types[g].upper_bound;
  return b;
}

TypeBounds resolve_bounds(const Scenario& s) {
  std::vector<double> computed(s.type_count(), 0.0);
  bool need = false;
  for (const auto& t : s.patient_types) need = need || !t.upper_bound;
  if (need) computed = bound_analysis(s).bounds;
  return resolve_bounds(s, computed, subtype_bounds(s));
}

FeasibilityReport check_feasibility(const Scenario& s, const CaseMix& mix) {
  const std::size_t G = s.type_count();
  if (mix.size() != G) throw PreconditionError("case mix needs one value per patient type");
  for (double v : mix.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("case mix values must be non-negative");

  FeasibilityReport report;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& t = s.patient_types[g];
    if (t.upper_bound && mix[g] > *t.upper_bound + 1e-9) {
      std::ostringstream msg;
      msg << "type " << t.id << ": " << mix[g] << " exceeds its bound " << *t.upper_bound;
      report.violated.push_back(msg.str());
    }
  }

  // Elastic form: zone hours may overflow at a cost, so the least overflow
  // names the zones that cannot cope.
  CmpOptions opt;
  opt.apply_overrides = false;
  opt.sub_mix_adherence = false;
  CmpModel m = build_cmp_model(s, opt);
  for (std::size_t g = 0; g < G; ++g) {
    m.lp.set_bounds(m.n1[g], mix[g], mix[g]);
    const auto& t = s.patient_types[g];
    for (std::size_t p = 0; p < t.sub_types.size(); ++p) {
      const double v = t.sub_types[p].mix_fraction * mix[g];
      m.lp.set_bounds(m.n2[g][p], v, v);
    }
  }

  LinearProgram lp;
  lp.set_sense(Sense::minimize);
  for (const auto& v : m.lp.variables()) lp.add_variable(v.name, v.lower, v.upper);
  std::vector<std::pair<std::size_t, VarId>> overflow;
  for (const auto& row : m.lp.constraints()) {
    std::vector<Term> terms = row.terms;
    if (row.name.rfind("hours_", 0) == 0) {
      const std::string zone = row.name.substr(6);
      const std::size_t w = *s.zone_index(zone);
      VarId o = lp.add_variable("overflow_" + zone);
      lp.set_objective(o, 1.0 / std::max(1.0, row.rhs));
      overflow.emplace_back(w, o);
      terms.push_back({o, -1.0});
    }
    lp.add_constraint(terms, row.relation, row.rhs, row.name);
  }
  LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) {
    report.plan.status = sol.status;
    report.plan.message = sol.message;
    report.violated.push_back(std::string("capacity model could not be solved: ") +
                              to_string(sol.status));
    return report;
  }
  for (const auto& [w, o] : overflow) {
    const double extra = sol.value(o);
    if (extra > 1e-6 * std::max(1.0, s.zone_capacity(w))) {
      std::ostringstream msg;
      msg << "zone " << s.zones[w].id << ": needs " << extra << " more hours than its "
          << s.zone_capacity(w);
      report.violated.push_back(msg.str());
    }
  }
  // Same variable order as the model, so the model's handles still apply.
  LpSolution trimmed = sol;
  trimmed.values.resize(m.lp.variable_count());
  report.plan = extract_plan(s, m, trimmed);
  report.feasible = report.violated.empty();
  return report;
}

}  // namespace casemix
