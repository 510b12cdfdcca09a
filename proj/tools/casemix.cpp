// Command-line front end: bounds, solve, feasible, alter, sweep, compare,
// similarity and serve.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "casemix/report.hpp"
#include "casemix/service.hpp"
#include "casemix/store.hpp"

using namespace casemix;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kInput = 2, kNoSolution = 3, kIo = 4 };

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw PreconditionError("'" + item + "' is not a number");
    }
  }
  return out;
}

// "a,b,c" or "@file.json" holding a case mix.
CaseMix parse_mix(const std::string& text) {
  if (!text.empty() && text[0] == '@') {
    MixFile f = load_mix_file(text.substr(1));
    if (!f.case_mix) throw PreconditionError(text.substr(1) + " has no case_mix");
    return *f.case_mix;
  }
  return CaseMix{parse_list(text)};
}

std::vector<std::size_t> parse_types(const Scenario& s, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string id;
  while (std::getline(in, id, ',')) {
    auto g = s.type_index(id);
    if (!g) throw PreconditionError("unknown type '" + id + "'");
    out.push_back(*g);
  }
  return out;
}

CaseMix default_baseline(const Scenario& s) {
  PlanResult p = max_throughput(s, s.type_mix());
  if (!p.ok()) throw PreconditionError("the scenario mix has no feasible plan; pass --baseline");
  return p.case_mix;
}

void print(const TextTable& t, OutputFormat f) { std::cout << render(t, f); }

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

struct Common {
  std::string scenario;
  std::string format = "table";

  OutputFormat output() const {
    auto f = parse_output_format(format);
    if (!f) throw PreconditionError("--out must be table, csv or json");
    return *f;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario,--scenario", c.scenario, "Scenario JSON file")->envname("CASEMIX_SCENARIO")->required();
  cmd->add_option("--out", c.format, "Output format: table, csv or json")->envname("CASEMIX_FORMAT");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hospital case-mix planning"};
  app.require_subcommand(1);

  Common common;
  std::string mix_text, baseline_text, type_id, sub_type_id, method_text = "eq", deltas_text,
                                                               dump_lp, upper_text, lower_text,
                                                               epsilon_text, subset_text,
                                                               normalization = "range", a_text, b_text;
  double delta = 0.0, from = 0.0, to = 0.0, step = 0.0, tie = 0.05;
  bool no_mix = false, show_util = false, unscaled = false;
  std::size_t breakpoints = 500;

  auto* bounds_cmd = app.add_subcommand("bounds", "Largest count of each type and sub-type");
  add_common(bounds_cmd, common);

  auto* solve_cmd = app.add_subcommand("solve", "Maximum throughput for a type mix");
  add_common(solve_cmd, common);
  solve_cmd->add_option("--mix", mix_text, "Type mix fractions, comma separated (default: scenario mix)");
  solve_cmd->add_flag("--no-mix", no_mix, "Drop the mix constraint");
  solve_cmd->add_flag("--utilization", show_util, "Also print zone utilisation");
  solve_cmd->add_option("--dump-lp", dump_lp, "Write the LP in text form to this file");

  auto* feasible_cmd = app.add_subcommand("feasible", "Check whether a case mix fits");
  add_common(feasible_cmd, common);
  feasible_cmd->add_option("--case-mix", mix_text, "Patients per type, or @file.json")->required();

  auto add_alter_options = [&](CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--type", type_id, "Type to force");
    cmd->add_option("--method", method_text, "eq, lin or ssq");
    cmd->add_option("--baseline", baseline_text, "Starting case mix, or @file.json (default: scenario optimum)");
    cmd->add_flag("--unscaled", unscaled, "Do not divide moves by the bounds");
    cmd->add_option("--breakpoints", breakpoints, "Interior breakpoints for ssq")->envname("CASEMIX_BREAKPOINTS");
    cmd->add_flag("--utilization", show_util, "Also print zone utilisation");
  };

  auto* alter_cmd = app.add_subcommand("alter", "Force one type (or sub-type) up or down");
  add_alter_options(alter_cmd);
  alter_cmd->add_option("--sub-type", sub_type_id, "Sub-type to force instead of a type");
  alter_cmd->add_option("--delta", delta, "Change in patients")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Alterations over a range of deltas");
  add_alter_options(sweep_cmd);
  sweep_cmd->add_option("--deltas", deltas_text, "Comma separated deltas");
  sweep_cmd->add_option("--from", from, "First delta of a range");
  sweep_cmd->add_option("--to", to, "Last delta of a range");
  sweep_cmd->add_option("--step", step, "Step of a range");

  auto* compare_cmd = app.add_subcommand("compare", "Gains of mix b over mix a against its losses");
  add_common(compare_cmd, common);
  compare_cmd->add_option("--a", a_text, "First case mix, or @file.json")->required();
  compare_cmd->add_option("--b", b_text, "Second case mix, or @file.json")->required();
  compare_cmd->add_option("--normalization", normalization, "range, upper_only or epsilon");
  compare_cmd->add_option("--upper", upper_text, "Upper bounds (default: scenario bounds)");
  compare_cmd->add_option("--lower", lower_text, "Lower bounds (default: zero)");
  compare_cmd->add_option("--epsilon,--eps", epsilon_text, "Per-type significance thresholds");
  compare_cmd->add_option("--subset", subset_text, "Type ids to compare, comma separated");
  compare_cmd->add_option("--tie", tie, "Largest |R - 1| reported as even");

  auto* similarity_cmd = app.add_subcommand("similarity", "Significant differences between two mixes");
  similarity_cmd->add_option("--a", a_text, "First case mix")->required();
  similarity_cmd->add_option("--b", b_text, "Second case mix")->required();
  similarity_cmd->add_option("--epsilon,--eps", epsilon_text, "Per-type thresholds")->required();

  ServiceConfig serve_cfg;
  std::string serve_scenario, state_dir = "casemix-state";
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--scenario", serve_scenario, "Scenario to load at start-up")->envname("CASEMIX_SCENARIO");
  serve_cmd->add_option("--state-dir", state_dir, "Directory for the working scenario and sessions")
      ->envname("CASEMIX_STATE_DIR");
  serve_cmd->add_option("--host", serve_cfg.host, "Address to bind")->envname("CASEMIX_HOST");
  serve_cmd->add_option("--port", serve_cfg.port, "Port to bind (0 picks one)")->envname("CASEMIX_PORT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*similarity_cmd) {
      Similarity s = similarity(parse_mix(a_text), parse_mix(b_text), parse_list(epsilon_text));
      TextTable t{{"type", "significant"}, {}};
      for (std::size_t g = 0; g < s.significant.size(); ++g)
        t.rows.push_back({std::to_string(g + 1), s.significant[g] ? "yes" : "no"});
      t.rows.push_back({"los_pct", format_number(s.los, 1)});
      t.rows.push_back({"lod_pct", format_number(s.lod, 1)});
      print(t, OutputFormat::table);
      return kOk;
    }

    if (*serve_cmd) {
      serve_cfg.scenario_file = serve_scenario;
      serve_cfg.state_dir = state_dir;
      static Service* running = nullptr;
      Service service(serve_cfg);
      const int port = service.bind();
      if (port < 0) {
        std::cerr << "cannot bind " << serve_cfg.host << ":" << serve_cfg.port << '\n';
        return kIo;
      }
      running = &service;
      std::signal(SIGINT, [](int) { if (running) running->stop(); });
      std::signal(SIGTERM, [](int) { if (running) running->stop(); });
      std::cout << "listening on http://" << serve_cfg.host << ":" << port << std::endl;
      service.serve();
      return kOk;
    }

    StoredScenario stored = load_scenario(common.scenario);
    const Scenario& s = stored.scenario;
    const OutputFormat out = common.output();

    if (*bounds_cmd) {
      ensure_bounds(stored);
      TypeBounds resolved = resolve_bounds(s, stored.cache->type_bounds, stored.cache->sub_type_bounds);
      if (out == OutputFormat::json)
        print_json({{"computed", to_json(CaseMix{stored.cache->type_bounds})},
                    {"bounds", to_json(CaseMix{resolved.type})},
                    {"sub_type_bounds", to_json(SubMix{resolved.sub_type})}});
      else
        print(bounds_table(s, stored.cache->type_bounds, stored.cache->sub_type_bounds), out);
      return kOk;
    }

    if (*solve_cmd) {
      std::vector<double> mix = s.type_mix();
      if (!mix_text.empty()) mix = parse_list(mix_text);
      if (no_mix) mix.clear();
      if (!dump_lp.empty()) {
        CmpOptions opt;
        opt.type_mix = mix;
        CmpModel m = build_cmp_model(s, opt);
        m.lp.set_sense(Sense::maximize);
        m.lp.set_objective(m.total, 1.0);
        std::ofstream f(dump_lp);
        write_lp_text(m.lp, f);
        if (!f) throw StoreError(StoreErrorCode::io, "cannot write " + dump_lp);
      }
      PlanResult r = max_throughput(s, mix);
      if (out == OutputFormat::json) {
        print_json(to_json(r));
      } else if (r.ok()) {
        print(plan_table(s, r), out);
        if (show_util) print(utilization_table(r.utilization), out);
      } else {
        std::cerr << "no plan: " << to_string(r.status) << '\n';
      }
      return r.ok() ? kOk : kNoSolution;
    }

    if (*feasible_cmd) {
      FeasibilityReport r = check_feasibility(s, parse_mix(mix_text));
      if (out == OutputFormat::json) {
        print_json(to_json(r));
      } else {
        std::cout << (r.feasible ? "feasible" : "infeasible") << '\n';
        for (const auto& v : r.violated) std::cout << "  " << v << '\n';
        if (r.plan.ok()) print(utilization_table(r.plan.utilization), out);
      }
      return r.feasible ? kOk : kNoSolution;
    }

    if (*alter_cmd || *sweep_cmd) {
      auto method = parse_method(method_text);
      if (!method) throw PreconditionError("--method must be eq, lin or ssq");
      AlterationOptions opt;
      opt.scaled = !unscaled;
      opt.breakpoints = breakpoints;
      TypeBounds b = scenario_bounds(stored);
      CaseMix baseline = baseline_text.empty() ? default_baseline(s) : parse_mix(baseline_text);

      std::vector<AlterationResult> results;
      if (*alter_cmd && !sub_type_id.empty()) {
        auto gp = s.sub_type_index(sub_type_id);
        if (!gp) throw PreconditionError("unknown sub-type '" + sub_type_id + "'");
        SubtypeAlterationRequest req{gp->first, gp->second, delta, *method,
                                     proportional_sub_mix(s, baseline), opt};
        if (!baseline_text.empty() && baseline_text[0] == '@') {
          MixFile f = load_mix_file(baseline_text.substr(1));
          if (f.sub_mix) req.baseline = *f.sub_mix;
        }
        results.push_back(alter_subtype(s, b, req));
      } else {
        auto g = s.type_index(type_id);
        if (!g) throw PreconditionError("--type must name a patient type");
        AlterationRequest req{*g, delta, *method, baseline, opt};
        std::vector<double> deltas{delta};
        if (*sweep_cmd) {
          if (!deltas_text.empty()) {
            deltas = parse_list(deltas_text);
          } else {
            if (!(step > 0.0)) throw PreconditionError("sweep needs --deltas or --from/--to/--step");
            deltas.clear();
            for (double d = from; d <= to + 1e-9 * std::max(1.0, std::abs(to)); d += step)
              if (std::abs(d) > 1e-12) deltas.push_back(d);
          }
        }
        // A single alteration reports a bad delta as invalid input; a sweep
        // keeps going and marks the row.
        if (*alter_cmd) results.push_back(alter_type(s, b, req));
        else results = sweep(s, b, req, deltas);
      }

      if (out == OutputFormat::json) {
        json arr = json::array();
        for (const auto& r : results) arr.push_back(to_json(r));
        print_json(*alter_cmd ? arr[0] : arr);
      } else {
        if (*alter_cmd && results[0].ok())
          print(alteration_detail_table(s, results[0]), out);
        else
          print(alteration_table(s, results), out);
        if (show_util && results.size() == 1 && results[0].ok())
          print(utilization_table(results[0].utilization), out);
        for (const auto& r : results) {
          for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
          if (!r.ok() && !r.message.empty()) std::cerr << "delta " << r.delta << ": " << r.message << '\n';
        }
      }
      for (const auto& r : results)
        if (!r.ok()) return kNoSolution;
      return kOk;
    }

    if (*compare_cmd) {
      CompareOptions opt;
      if (normalization == "range") opt.normalization = Normalization::range;
      else if (normalization == "upper_only") opt.normalization = Normalization::upper_only;
      else if (normalization == "epsilon") opt.normalization = Normalization::epsilon;
      else throw PreconditionError("--normalization must be range, upper_only or epsilon");
      opt.tie_tolerance = tie;
      if (!lower_text.empty()) opt.lower = parse_list(lower_text);
      if (!epsilon_text.empty()) opt.epsilon = parse_list(epsilon_text);
      if (!upper_text.empty()) opt.upper = parse_list(upper_text);
      else if (opt.normalization != Normalization::epsilon) opt.upper = scenario_bounds(stored).type;
      if (!subset_text.empty()) opt.subset = parse_types(s, subset_text);
      const CaseMix a = parse_mix(a_text), b = parse_mix(b_text);
      CompareResult r = compare(a, b, opt);
      // Flags default to ε = bound when no thresholds are given.
      std::vector<double> eps = opt.epsilon.empty() ? scenario_bounds(stored).type : opt.epsilon;
      if (out == OutputFormat::json) print_json(to_json(r));
      else print(compare_table(s, a, b, r, eps), out);
      return kOk;
    }
  } catch (const StoreError& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v.path << ": " << v.message << '\n';
    return e.code() == StoreErrorCode::io ? kIo : kInput;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kOk;
}
