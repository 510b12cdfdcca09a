#include "casemix/alteration.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "casemix/pwl.hpp"

namespace casemix {

const char* to_string(Method m) {
  switch (m) {
    case Method::eq:
      return "eq";
    case Method::lin:
      return "lin";
    case Method::ssq:
      return "ssq";
  }
  return "eq";
}

std::optional<Method> parse_method(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "eq" || t == "cma-eq") return Method::eq;
  if (t == "lin" || t == "cma-lin") return Method::lin;
  if (t == "ssq" || t == "cma-ssq") return Method::ssq;
  return std::nullopt;
}

namespace {

// A quantity that may move away from its baseline to absorb the change.
struct Mover {
  VarId var;
  double base = 0.0;
  double scale = 1.0;  // γ = sign·(base - value)/scale
  double span = 1.0;   // x = value/span lies in [0, 1]
};

double weight(const Mover& mv) {
  const double r = mv.span / mv.scale;
  return r * r;
}

double gamma_of(const Mover& mv, double sign, double value) {
  const double g = sign * (mv.base - value) / mv.scale;
  return g < 0.0 && g > -1e-9 ? 0.0 : g;
}

struct CoreOutcome {
  LpSolution sol;
  double lambda = 0.0;
  bool approximate = false;
};

// Global maximum of Σ w·(pwl(x) - 2x̂x + x̂²) over the model. Each node
// restricts every x to a window of breakpoints and uses the chord there,
// which over-estimates the convex pwl; single-segment windows are exact.
CoreOutcome maximise_squares(const LinearProgram& base, const std::vector<Mover>& movers,
                             const PwlSquare& pwl, std::size_t node_limit) {
  struct Node {
    std::vector<std::size_t> lo, hi;
    double parent_bound = kInfinity;
    std::size_t order = 0;
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.parent_bound != b.parent_bound) return a.parent_bound < b.parent_bound;
      return a.order > b.order;
    }
  };

  const std::size_t segs = pwl.segments();
  auto true_value = [&](const LpSolution& sol) {
    double v = 0.0;
    for (const auto& mv : movers) {
      const double x = sol.value(mv.var) / mv.span;
      const double xh = mv.base / mv.span;
      v += weight(mv) * (pwl.eval(x) - 2.0 * xh * x + xh * xh);
    }
    return v;
  };

  Node root;
  for (const auto& mv : movers) {
    const double xh = std::clamp(mv.base / mv.span, 0.0, 1.0);
    root.lo.push_back(std::min(pwl.segment_of(xh), segs - 1));
    root.hi.push_back(segs);
  }

  std::priority_queue<Node, std::vector<Node>, Worse> open;
  open.push(root);
  CoreOutcome best;
  best.sol.status = LpStatus::infeasible;
  double incumbent = -kInfinity;
  std::size_t nodes = 0;
  std::size_t counter = 0;
  LpStatus first_failure = LpStatus::infeasible;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double prune_tol = 1e-10 * std::max(1.0, std::abs(incumbent));
    if (node.parent_bound <= incumbent + prune_tol) continue;
    if (nodes >= node_limit) {
      best.approximate = true;
      break;
    }
    ++nodes;

    LinearProgram lp = base;
    lp.clear_objective();
    lp.set_sense(Sense::maximize);
    double constant = 0.0;
    for (std::size_t j = 0; j < movers.size(); ++j) {
      const auto& mv = movers[j];
      const double a = pwl.breakpoints[node.lo[j]];
      const double b = pwl.breakpoints[node.hi[j]];
      const double xh = mv.base / mv.span;
      const double w = weight(mv);
      lp.set_objective(mv.var, w * (a + b - 2.0 * xh) / mv.span);
      constant += w * (xh * xh - a * b);
      const auto& v = lp.variable(mv.var);
      lp.set_bounds(mv.var, std::max(v.lower, a * mv.span), std::min(v.upper, b * mv.span));
    }
    LpSolution sol = solve_lp(lp);
    if (!sol.optimal()) {
      if (sol.status != LpStatus::infeasible) first_failure = sol.status;
      continue;
    }
    const double bound = sol.objective + constant;
    const double value = true_value(sol);
    if (value > incumbent) {
      incumbent = value;
      best.sol = sol;
    }
    if (bound <= incumbent + 1e-10 * std::max(1.0, std::abs(incumbent))) continue;

    // Branch on the mover whose chord is furthest above the pwl.
    std::size_t pick = movers.size();
    double worst = 1e-12;
    for (std::size_t j = 0; j < movers.size(); ++j) {
      if (node.hi[j] - node.lo[j] < 2) continue;
      const double x = sol.value(movers[j].var) / movers[j].span;
      const double gap = weight(movers[j]) * (pwl.chord(node.lo[j], node.hi[j], x) - pwl.eval(x));
      if (gap > worst) {
        worst = gap;
        pick = j;
      }
    }
    if (pick == movers.size()) continue;
    const double x = sol.value(movers[pick].var) / movers[pick].span;
    std::size_t k = static_cast<std::size_t>(std::llround(x * static_cast<double>(segs)));
    k = std::clamp(k, node.lo[pick] + 1, node.hi[pick] - 1);
    Node left = node, right = node;
    left.hi[pick] = k;
    right.lo[pick] = k;
    left.parent_bound = right.parent_bound = bound;
    left.order = ++counter;
    right.order = ++counter;
    open.push(left);
    open.push(right);
  }
  if (!best.sol.optimal()) best.sol.status = first_failure;
  return best;
}

CoreOutcome solve_core(CmpModel& m, const std::vector<Mover>& movers, double sign,
                       Method method, const AlterationOptions& opt) {
  if (method == Method::ssq && opt.breakpoints == 0)
    throw PreconditionError("ssq needs at least one interior breakpoint");
  LinearProgram& lp = m.lp;
  for (const auto& mv : movers) {
    const auto& v = lp.variable(mv.var);
    if (sign > 0.0)
      lp.set_bounds(mv.var, v.lower, std::min(v.upper, mv.base));
    else
      lp.set_bounds(mv.var, std::max(v.lower, mv.base), v.upper);
  }

  CoreOutcome out;
  switch (method) {
    case Method::eq: {
      double cap = kInfinity;
      if (opt.strict_eq && sign > 0.0)
        for (const auto& mv : movers) cap = std::min(cap, mv.base / mv.scale);
      VarId lambda = lp.add_variable("lambda", 0.0, cap);
      for (const auto& mv : movers) {
        // γ <= λ and, for the clip, value >= base - sign·λ·scale.
        if (opt.strict_eq) {
          lp.add_constraint({{mv.var, -sign}, {lambda, -mv.scale}}, Relation::equal, -sign * mv.base);
        } else {
          lp.add_constraint({{mv.var, -sign}, {lambda, -mv.scale}}, Relation::less_equal,
                            -sign * mv.base);
          lp.add_constraint({{mv.var, 1.0}, {lambda, sign * mv.scale}}, Relation::greater_equal,
                            mv.base);
        }
      }
      lp.set_sense(Sense::minimize);
      lp.set_objective(lambda, sign);
      LpSolution first = solve_lp(lp);
      if (!first.optimal() || opt.strict_eq) {
        out.sol = first;
        if (first.optimal()) out.lambda = first.value(lambda);
        return out;
      }
      // Among all minimax solutions take the one that moves every type as
      // far as λ allows.
      const double lam = first.value(lambda);
      const double slack = 1e-9 * std::max(1.0, lam);
      lp.set_bounds(lambda, std::max(0.0, lam - slack), lam + slack);
      lp.clear_objective();
      for (const auto& mv : movers) lp.set_objective(mv.var, sign / mv.scale);
      LpSolution second = solve_lp(lp);
      out.sol = second.optimal() ? second : first;
      out.lambda = out.sol.value(lambda);
      return out;
    }
    case Method::lin: {
      lp.set_sense(Sense::maximize);
      for (const auto& mv : movers) lp.set_objective(mv.var, 1.0 / mv.scale);
      out.sol = solve_lp(lp);
      return out;
    }
    case Method::ssq: {
      const PwlSquare pwl = build_square_pwl(opt.breakpoints);
      if (sign < 0.0) return maximise_squares(lp, movers, pwl, opt.node_limit);
      lp.set_sense(Sense::minimize);
      for (std::size_t j = 0; j < movers.size(); ++j) {
        const auto& mv = movers[j];
        VarId x = lp.add_variable("x" + std::to_string(j), 0.0, 1.0);
        lp.add_constraint({{x, 1.0}, {mv.var, -1.0 / mv.span}}, Relation::equal, 0.0);
        PwlBlock block = add_pwl_variable(lp, x, pwl, "q" + std::to_string(j));
        const double w = weight(mv);
        lp.set_objective(block.y, w);
        lp.set_objective(x, -2.0 * w * mv.base / mv.span);
      }
      out.sol = solve_lp(lp);
      return out;
    }
  }
  return out;
}

double check_delta(double delta, double base, double bound, const std::string& what) {
  if (!std::isfinite(delta) || delta == 0.0)
    throw PreconditionError("delta must be a non-zero finite number");
  const double target = base + delta;
  const double tol = 1e-9 * std::max(1.0, std::abs(bound));
  if (target < -tol || target > bound + tol) {
    std::ostringstream msg;
    msg << what << " would move to " << target << ", outside [0, " << bound << "]";
    throw PreconditionError(msg.str());
  }
  return std::clamp(target, 0.0, bound);
}

double scale_for(double bound, bool scaled, const std::string& what) {
  if (!scaled) return 1.0;
  if (!std::isfinite(bound))
    throw PreconditionError(what + " is uncapped, so its moves cannot be scaled");
  return bound > 0.0 ? bound : 1.0;
}

double span_for(double bound) { return std::isfinite(bound) && bound > 0.0 ? bound : 1.0; }

void finish(const Scenario& s, const CmpModel& m, const CoreOutcome& core, AlterationResult& r) {
  r.status = core.sol.status;
  r.message = core.sol.message;
  r.approximate = core.approximate;
  if (core.approximate) r.warnings.push_back("node limit reached; best solution found is returned");
  if (!core.sol.optimal()) return;
  PlanResult plan = extract_plan(s, m, core.sol);
  r.new_mix = plan.case_mix;
  r.new_sub_mix = plan.sub_mix;
  r.total = plan.total;
  r.allocation = std::move(plan.allocation);
  r.utilization = std::move(plan.utilization);
  r.lambda = core.lambda;
}

double objective_of(Method method, double lambda, const std::vector<double>& gammas) {
  double sum = 0.0, sq = 0.0;
  for (double g : gammas) {
    sum += g;
    sq += g * g;
  }
  switch (method) {
    case Method::eq:
      return lambda;
    case Method::lin:
      return sum;
    case Method::ssq:
      return sq;
  }
  return 0.0;
}

}  // namespace

AlterationResult alter_type(const Scenario& s, const TypeBounds& bounds,
                            const AlterationRequest& req) {
  const std::size_t G = s.type_count();
  if (req.type >= G) throw PreconditionError("unknown patient type index");
  if (req.baseline.size() != G) throw PreconditionError("baseline needs one value per type");
  if (bounds.type.size() != G) throw PreconditionError("bounds need one value per type");
  for (double v : req.baseline.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("baseline values must be non-negative");
  const auto& star = s.patient_types[req.type];
  const double target =
      check_delta(req.delta, req.baseline[req.type], bounds.type[req.type], "type " + star.id);

  AlterationResult r;
  r.method = req.method;
  r.type = req.type;
  r.delta = req.delta;
  r.baseline = req.baseline;

  FeasibilityReport base_check = check_feasibility(s, req.baseline);
  if (!base_check.feasible)
    for (const auto& v : base_check.violated) r.warnings.push_back("baseline infeasible: " + v);

  const double sign = req.delta > 0.0 ? 1.0 : -1.0;
  CmpOptions opt;
  CmpModel m = build_cmp_model(s, opt);
  m.lp.set_bounds(m.n1[req.type], target, target);

  std::vector<Mover> movers;
  std::vector<std::size_t> mover_type;
  for (std::size_t g = 0; g < G; ++g) {
    if (g == req.type) continue;
    const std::string what = "type " + s.patient_types[g].id;
    movers.push_back({m.n1[g], req.baseline[g], scale_for(bounds.type[g], req.options.scaled, what),
                      span_for(bounds.type[g])});
    mover_type.push_back(g);
  }

  CoreOutcome core = solve_core(m, movers, sign, req.method, req.options);
  finish(s, m, core, r);
  if (!r.ok()) return r;

  r.gamma.assign(G, 0.0);
  std::vector<double> gs;
  for (std::size_t j = 0; j < movers.size(); ++j) {
    const double g = gamma_of(movers[j], sign, r.new_mix[mover_type[j]]);
    r.gamma[mover_type[j]] = g;
    gs.push_back(g);
    r.total_impact += r.new_mix[mover_type[j]] - req.baseline[mover_type[j]];
  }
  r.objective = objective_of(req.method, r.lambda, gs);
  return r;
}

AlterationResult alter_subtype(const Scenario& s, const TypeBounds& bounds,
                               const SubtypeAlterationRequest& req) {
  const std::size_t G = s.type_count();
  if (req.type >= G || req.sub_type >= s.patient_types[req.type].sub_types.size())
    throw PreconditionError("unknown sub-type index");
  if (req.baseline.values.size() != G) throw PreconditionError("baseline needs one row per type");
  if (bounds.sub_type.size() != G) throw PreconditionError("sub-type bounds need one row per type");
  for (std::size_t g = 0; g < G; ++g) {
    const std::size_t P = s.patient_types[g].sub_types.size();
    if (req.baseline.values[g].size() != P || bounds.sub_type[g].size() != P)
      throw PreconditionError("baseline and bounds must match the sub-types of " +
                              s.patient_types[g].id);
    for (double v : req.baseline.values[g])
      if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("baseline values must be non-negative");
  }
  const auto& star = s.patient_types[req.type].sub_types[req.sub_type];
  const double target = check_delta(req.delta, req.baseline.values[req.type][req.sub_type],
                                    bounds.sub_type[req.type][req.sub_type], "sub-type " + star.id);

  AlterationResult r;
  r.method = req.method;
  r.type = req.type;
  r.sub_type = req.sub_type;
  r.delta = req.delta;
  r.baseline = req.baseline.type_totals();

  const double sign = req.delta > 0.0 ? 1.0 : -1.0;
  CmpOptions opt;
  opt.free_sub_mix.assign(G, false);
  opt.free_sub_mix[req.type] = true;
  CmpModel m = build_cmp_model(s, opt);
  m.lp.set_bounds(m.n2[req.type][req.sub_type], target, target);

  std::vector<Mover> movers;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& t = s.patient_types[g];
    for (std::size_t p = 0; p < t.sub_types.size(); ++p) {
      if (g == req.type && p == req.sub_type) continue;
      const double nbar = bounds.sub_type[g][p];
      movers.push_back({m.n2[g][p], req.baseline.values[g][p],
                        scale_for(nbar, req.options.scaled, "sub-type " + t.sub_types[p].id),
                        span_for(nbar)});
      where.emplace_back(g, p);
    }
  }

  CoreOutcome core = solve_core(m, movers, sign, req.method, req.options);
  finish(s, m, core, r);
  if (!r.ok()) return r;

  r.sub_gamma.resize(G);
  for (std::size_t g = 0; g < G; ++g) r.sub_gamma[g].assign(s.patient_types[g].sub_types.size(), 0.0);
  std::vector<double> gs;
  for (std::size_t j = 0; j < movers.size(); ++j) {
    const auto [g, p] = where[j];
    const double v = r.new_sub_mix.values[g][p];
    const double gm = gamma_of(movers[j], sign, v);
    r.sub_gamma[g][p] = gm;
    gs.push_back(gm);
    r.total_impact += v - req.baseline.values[g][p];
  }
  r.objective = objective_of(req.method, r.lambda, gs);
  return r;
}

std::vector<AlterationResult> sweep(const Scenario& s, const TypeBounds& bounds,
                                    const AlterationRequest& base,
                                    const std::vector<double>& deltas) {
  std::vector<AlterationResult> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    AlterationRequest req = base;
    req.delta = d;
    try {
      out.push_back(alter_type(s, bounds, req));
    } catch (const PreconditionError& e) {
      // A bad row is reported in place; the rest of the sweep still runs.
      AlterationResult r;
      r.status = LpStatus::infeasible;
      r.message = e.what();
      r.method = req.method;
      r.type = req.type;
      r.delta = d;
      r.baseline = req.baseline;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace casemix
