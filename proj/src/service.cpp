#include "casemix/service.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "casemix/session.hpp"
#include "casemix/store.hpp"

namespace casemix {

using nlohmann::json;

namespace {

constexpr const char* kDefaultSession = "default";

struct HttpError {
  int status;
  std::string kind;
  std::string message;
  std::string path;
  std::vector<Violation> violations;
};

[[noreturn]] void bad_request(const std::string& message, const std::string& path = {}) {
  throw HttpError{400, "bad_request", message, path, {}};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    bad_request(std::string("malformed JSON: ") + e.what());
  }
}

std::size_t type_ref(const Scenario& s, const json& j, const std::string& path) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto g = j.get<long long>();
    if (g < 0 || static_cast<std::size_t>(g) >= s.type_count()) bad_request("unknown type index", path);
    return static_cast<std::size_t>(g);
  }
  if (j.is_string()) {
    auto g = s.type_index(j.get<std::string>());
    if (!g) bad_request("unknown type '" + j.get<std::string>() + "'", path);
    return *g;
  }
  bad_request("expected a type id or index", path);
}

double number_field(const json& body, const char* key) {
  if (!body.contains(key)) bad_request("missing field", key);
  if (!body[key].is_number()) bad_request("expected a number", key);
  return body[key].get<double>();
}

Method method_field(const json& body) {
  const std::string text = body.value("method", std::string("eq"));
  auto m = parse_method(text);
  if (!m) bad_request("method must be eq, lin or ssq", "method");
  return *m;
}

AlterationOptions options_field(const json& body) {
  AlterationOptions o;
  if (body.contains("scaled")) o.scaled = body["scaled"].get<bool>();
  if (body.contains("breakpoints")) o.breakpoints = body["breakpoints"].get<std::size_t>();
  if (body.contains("strict_eq")) o.strict_eq = body["strict_eq"].get<bool>();
  return o;
}

std::vector<double> list_field(const json& body, const char* key) {
  try {
    return case_mix_from_json(body.at(key), key).values;
  } catch (const json::out_of_range&) {
    bad_request("missing field", key);
  }
}

json violations_json(const std::vector<Violation>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back({{"path", x.path}, {"message", x.message}});
  return out;
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceConfig c)
      : config(std::move(c)), sessions(config.state_dir / "sessions") {}

  ServiceConfig config;
  httplib::Server server;
  SessionStore sessions;

  std::shared_mutex scenario_mutex;
  StoredScenario stored;

  std::filesystem::path scenario_path() const { return config.state_dir / "scenario.json"; }

  void load() {
    std::filesystem::create_directories(config.state_dir);
    if (!config.scenario_file.empty()) {
      stored = load_scenario(config.scenario_file);
      save_scenario(scenario_path(), stored);
    } else {
      stored = load_scenario(scenario_path());
    }
    ensure_default_session();
  }

  // Lock order everywhere: scenario first, then a session.
  void ensure_default_session() {
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    auto lock = sessions.lock(kDefaultSession);
    if (sessions.exists(kDefaultSession)) {
      Session s = sessions.get(kDefaultSession);
      if (s.scenario_fingerprint == stored.fingerprint) return;
    }
    sessions.put(new_session(kDefaultSession, stored.scenario, stored.fingerprint,
                             default_baseline()));
  }

  CaseMix default_baseline() {
    double sum = 0.0;
    for (double mu : stored.scenario.type_mix()) sum += mu;
    if (sum <= 0.0) return CaseMix{std::vector<double>(stored.scenario.type_count(), 0.0)};
    PlanResult p = max_throughput(stored.scenario, stored.scenario.type_mix());
    if (!p.ok()) return CaseMix{std::vector<double>(stored.scenario.type_count(), 0.0)};
    return p.case_mix;
  }

  // Bounds with overrides applied, computing and persisting the cache if needed.
  TypeBounds bounds() {
    {
      std::shared_lock<std::shared_mutex> read(scenario_mutex);
      if (stored.cache_valid())
        return resolve_bounds(stored.scenario, stored.cache->type_bounds, stored.cache->sub_type_bounds);
    }
    std::unique_lock<std::shared_mutex> write(scenario_mutex);
    if (ensure_bounds(stored)) save_scenario(scenario_path(), stored);
    return resolve_bounds(stored.scenario, stored.cache->type_bounds, stored.cache->sub_type_bounds);
  }

  void routes();
  template <typename F>
  httplib::Server::Handler wrap(F f);
};

template <typename F>
httplib::Server::Handler Service::Impl::wrap(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    HttpError err{0, "", "", "", {}};
    try {
      json out = f(req);
      res.set_content(out.dump(), "application/json");
      return;
    } catch (const HttpError& e) {
      err = e;
    } catch (const PreconditionError& e) {
      err = {422, "precondition", e.what(), "", {}};
    } catch (const SessionError& e) {
      err = {e.kind() == SessionError::Kind::not_found ? 404 : 409,
             e.kind() == SessionError::Kind::not_found ? "not_found" : "conflict", e.what(), "", {}};
    } catch (const StoreError& e) {
      const int status = e.code() == StoreErrorCode::parse        ? 400
                         : e.code() == StoreErrorCode::validation ? 422
                                                                  : 500;
      err = {status, to_string(e.code()), e.what(), e.path(), e.violations()};
    } catch (const json::exception& e) {
      err = {400, "bad_request", e.what(), "", {}};
    } catch (const std::exception& e) {
      err = {500, "internal", e.what(), "", {}};
    }
    json body = {{"error", {{"kind", err.kind}, {"message", err.message}}}};
    if (!err.path.empty()) body["error"]["path"] = err.path;
    if (!err.violations.empty()) body["error"]["violations"] = violations_json(err.violations);
    res.status = err.status;
    res.set_content(body.dump(), "application/json");
  };
}

void Service::Impl::routes() {
  server.Get("/api/health", wrap([](const httplib::Request&) { return json{{"status", "ok"}}; }));

  server.Get("/api/scenario", wrap([this](const httplib::Request&) {
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    json j = scenario_to_json(stored.scenario);
    j["fingerprint"] = stored.fingerprint;
    return j;
  }));

  server.Put("/api/scenario", wrap([this](const httplib::Request& req) {
    StoredScenario next = parse_scenario(req.body);
    {
      std::unique_lock<std::shared_mutex> write(scenario_mutex);
      if (stored.cache_valid() && stored.fingerprint == next.fingerprint) next.cache = stored.cache;
      stored = std::move(next);
      save_scenario(scenario_path(), stored);
    }
    ensure_default_session();
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    return json{{"fingerprint", stored.fingerprint}, {"name", stored.scenario.name}};
  }));

  server.Get("/api/bounds", [this](const httplib::Request&, httplib::Response& res) {
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this](std::size_t, httplib::DataSink& sink) {
          auto event = [&sink](const std::string& name, const json& data) {
            const std::string msg = "event: " + name + "\ndata: " + data.dump() + "\n\n";
            return sink.write(msg.data(), msg.size());
          };
          StoredScenario snapshot;
          {
            std::shared_lock<std::shared_mutex> read(scenario_mutex);
            snapshot = stored;
          }
          const Scenario& s = snapshot.scenario;
          const bool cached = snapshot.cache_valid();
          std::vector<double> computed;
          if (cached) {
            computed = snapshot.cache->type_bounds;
            for (std::size_t g = 0; g < computed.size(); ++g)
              event("bound", {{"type", s.patient_types[g].id}, {"index", g},
                              {"bound", number_json(computed[g])}, {"cached", true}});
          } else {
            computed = bound_analysis(s, [&](std::size_t g, double b) {
                         event("bound", {{"type", s.patient_types[g].id}, {"index", g},
                                         {"bound", number_json(b)}, {"cached", false}});
                       }).bounds;
          }
          auto subs = cached ? snapshot.cache->sub_type_bounds : subtype_bounds(s);
          if (!cached) {
            std::unique_lock<std::shared_mutex> write(scenario_mutex);
            if (stored.fingerprint == snapshot.fingerprint) {
              stored.cache = BoundsCache{stored.fingerprint, computed, subs};
              save_scenario(scenario_path(), stored);
            }
          }
          TypeBounds resolved = resolve_bounds(s, computed, subs);
          json done = {{"computed", to_json(CaseMix{computed})},
                       {"bounds", to_json(CaseMix{resolved.type})},
                       {"sub_type_bounds", to_json(SubMix{resolved.sub_type})},
                       {"fingerprint", snapshot.fingerprint}};
          event("done", done);
          sink.done();
          return true;
        });
  });

  server.Post("/api/solve", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    std::vector<double> mix = stored.scenario.type_mix();
    if (body.contains("mix")) {
      if (body["mix"].is_null()) mix.clear();
      else mix = list_field(body, "mix");
    }
    return to_json(max_throughput(stored.scenario, mix));
  }));

  server.Post("/api/feasible", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    return to_json(check_feasibility(stored.scenario, CaseMix{list_field(body, "case_mix")}));
  }));

  server.Post("/api/session", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    const std::string id = body.value("id", std::string{});
    if (id.empty()) bad_request("missing field", "id");
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    auto lock = sessions.lock(id);
    CaseMix baseline = body.contains("baseline") ? CaseMix{list_field(body, "baseline")} : default_baseline();
    Session s = new_session(id, stored.scenario, stored.fingerprint, baseline);
    if (body.contains("baseline_sub_mix")) {
      s.baseline_sub_mix = sub_mix_from_json(body["baseline_sub_mix"], "baseline_sub_mix");
      s.current_sub_mix = s.baseline_sub_mix;
    }
    sessions.put(s);
    return session_to_json(s);
  }));

  server.Get(R"(/api/session/([A-Za-z0-9_-]+))", wrap([this](const httplib::Request& req) {
    const std::string id = req.matches[1];
    auto lock = sessions.lock(id);
    return session_to_json(sessions.get(id));
  }));

  auto alter = [this](const json& body) {
    TypeBounds b = bounds();
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    const Scenario& s = stored.scenario;
    const double delta = number_field(body, "delta");
    const Method method = method_field(body);
    const AlterationOptions opt = options_field(body);

    std::size_t type = 0;
    std::optional<std::size_t> sub;
    if (body.contains("sub_type")) {
      auto gp = s.sub_type_index(body["sub_type"].get<std::string>());
      if (!gp) bad_request("unknown sub-type", "sub_type");
      type = gp->first;
      sub = gp->second;
    } else {
      if (!body.contains("type")) bad_request("missing field", "type");
      type = type_ref(s, body["type"], "type");
    }

    // With an explicit baseline the call is stateless.
    if (body.contains("baseline")) {
      if (sub) {
        SubtypeAlterationRequest r{type, *sub, delta, method,
                                   sub_mix_from_json(body["baseline"], "baseline"), opt};
        return json{{"result", to_json(alter_subtype(s, b, r))}};
      }
      AlterationRequest r{type, delta, method, CaseMix{list_field(body, "baseline")}, opt};
      return json{{"result", to_json(alter_type(s, b, r))}};
    }

    const std::string id = body.value("session", std::string(kDefaultSession));
    auto lock = sessions.lock(id);
    Session session = sessions.get(id);
    if (session.scenario_fingerprint != stored.fingerprint)
      throw SessionError(SessionError::Kind::conflict, "session was opened on a different scenario");
    const std::size_t entry = propose(session, s, b, type, sub, delta, method, opt);
    sessions.put(session);
    return json{{"session", id}, {"entry", entry},
                {"result", to_json(session.history[entry].result)}};
  };
  server.Post("/api/alter", wrap([alter](const httplib::Request& req) { return alter(parse_body(req)); }));
  // Same contract, but the target must be a sub-type.
  server.Post("/api/alter-subtype", wrap([alter](const httplib::Request& req) {
    json body = parse_body(req);
    if (!body.contains("sub_type")) bad_request("missing field", "sub_type");
    return alter(body);
  }));

  server.Post("/api/decision", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    const std::string id = body.value("session", std::string(kDefaultSession));
    if (!body.contains("entry") || !body["entry"].is_number_integer()) bad_request("missing field", "entry");
    auto d = parse_decision(body.value("decision", std::string{}));
    if (!d || *d == Decision::pending) bad_request("decision must be accept or reject", "decision");
    auto lock = sessions.lock(id);
    Session next = apply_decision(sessions.get(id), body["entry"].get<std::size_t>(), *d);
    sessions.put(next);
    return session_to_json(next);
  }));

  server.Post("/api/sweep", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    TypeBounds b = bounds();
    std::shared_lock<std::shared_mutex> read(scenario_mutex);
    const Scenario& s = stored.scenario;
    AlterationRequest base;
    if (!body.contains("type")) bad_request("missing field", "type");
    base.type = type_ref(s, body["type"], "type");
    base.method = method_field(body);
    base.options = options_field(body);
    if (body.contains("baseline")) {
      base.baseline = CaseMix{list_field(body, "baseline")};
    } else {
      auto lock = sessions.lock(kDefaultSession);
      base.baseline = sessions.get(kDefaultSession).current_mix;
    }
    json out = json::array();
    for (const auto& r : sweep(s, b, base, list_field(body, "deltas"))) out.push_back(to_json(r));
    return out;
  }));

  server.Post("/api/compare", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    const CaseMix a{list_field(body, "a")}, bmix{list_field(body, "b")};
    CompareOptions opt;
    const std::string norm = body.value("normalization", std::string("range"));
    if (norm == "range") opt.normalization = Normalization::range;
    else if (norm == "upper_only") opt.normalization = Normalization::upper_only;
    else if (norm == "epsilon") opt.normalization = Normalization::epsilon;
    else bad_request("normalization must be range, upper_only or epsilon", "normalization");
    if (body.contains("lower")) opt.lower = list_field(body, "lower");
    if (body.contains("epsilon")) opt.epsilon = list_field(body, "epsilon");
    if (body.contains("tie_tolerance")) opt.tie_tolerance = number_field(body, "tie_tolerance");
    if (body.contains("upper")) opt.upper = list_field(body, "upper");
    else if (opt.normalization != Normalization::epsilon) opt.upper = bounds().type;
    if (body.contains("subset")) {
      std::shared_lock<std::shared_mutex> read(scenario_mutex);
      for (const auto& t : body["subset"]) opt.subset.push_back(type_ref(stored.scenario, t, "subset"));
    }
    return to_json(compare(a, bmix, opt));
  }));

  server.Post("/api/similarity", wrap([](const httplib::Request& req) {
    json body = parse_body(req);
    Similarity s = similarity(CaseMix{list_field(body, "a")}, CaseMix{list_field(body, "b")},
                              list_field(body, "epsilon"));
    return json{{"significant", s.significant}, {"los", s.los}, {"lod", s.lod}, {"similar", s.similar}};
  }));

  server.Post("/api/proximity", wrap([](const httplib::Request& req) {
    json body = parse_body(req);
    const double p = proximity(CaseMix{list_field(body, "mix")}, CaseMix{list_field(body, "ideal")},
                               CaseMix{list_field(body, "anti_ideal")}, list_field(body, "epsilon"));
    return json{{"proximity", p}, {"progress", 100.0 - p}};
  }));

  server.Post("/api/boundary", wrap([this](const httplib::Request& req) {
    json body = parse_body(req);
    std::vector<double> upper = body.contains("upper") ? list_field(body, "upper") : bounds().type;
    auto iv = similarity_boundary(CaseMix{list_field(body, "mix")}, list_field(body, "epsilon"),
                                  body.value("lambda", 1.0), upper);
    json out = json::array();
    for (const auto& i : iv)
      out.push_back({{"inner", {{"low", i.inner.low}, {"high", i.inner.high}}},
                     {"outer", {{"low", i.outer.low}, {"high", i.outer.high}}}});
    return out;
  }));
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->load();
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (impl_->config.port == 0) return impl_->server.bind_to_any_port(impl_->config.host);
  return impl_->server.bind_to_port(impl_->config.host, impl_->config.port) ? impl_->config.port : -1;
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace casemix
