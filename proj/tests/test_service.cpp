#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <thread>

#include "casemix/service.hpp"
#include "casemix/store.hpp"
#include "fixtures.hpp"
#include "temp_dir.hpp"

using namespace casemix;
using namespace casemix::testing;
using nlohmann::json;

namespace {

// A service on a free port over a scratch state directory.
struct Running {
  TempDir dir;
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = -1;

  explicit Running(const std::string& scenario = "demo_hospital_alteration.json") {
    ServiceConfig c;
    c.scenario_file = data_file(scenario);
    c.state_dir = dir.path() / "state";
    c.port = 0;
    service = std::make_unique<Service>(c);
    port = service->bind();
    REQUIRE(port > 0);
    thread = std::thread([this] { service->serve(); });
  }
  ~Running() {
    service->stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }

  json post(const std::string& path, const json& body, int want = 200) const {
    auto c = client();
    auto res = c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == want);
    return json::parse(res->body);
  }

  json get(const std::string& path, int want = 200) const {
    auto c = client();
    auto res = c.Get(path);
    REQUIRE(res);
    CHECK(res->status == want);
    return json::parse(res->body);
  }
};

const json kBaseline = {5.68, 48.82, 20.43, 10.22, 28.38};

void check_mix(const json& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t g = 0; g < want.size(); ++g) CHECK(std::abs(got[g].get<double>() - want[g]) <= tol);
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("health and scenario") {
    Running r;
    CHECK(r.get("/api/health")["status"] == "ok");
    const json s = r.get("/api/scenario");
    CHECK(s["name"] == "Demonstration hospital, alteration study");
    CHECK(s["fingerprint"].get<std::string>().size() == 16);
    CHECK(s["zones"].size() == 7);
  }

  TEST_CASE("replacing the scenario validates it") {
    Running r;
    json s = r.get("/api/scenario");
    s.erase("fingerprint");
    s["patient_types"][2]["sub_types"][0]["mix_fraction"] = 0.15;
    auto c = r.client();
    auto res = c.Put("/api/scenario", s.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    const json err = json::parse(res->body)["error"];
    CHECK(err["kind"] == "validation");
    REQUIRE(err["violations"].size() == 1);
    CHECK(err["violations"][0]["path"] == "patient_types[T3].sub_types");

    res = c.Put("/api/scenario", "{ nope", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    s["patient_types"][2]["sub_types"][0]["mix_fraction"] = 0.25;
    s["zones"][5]["beds"] = 15;
    res = c.Put("/api/scenario", s.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json now = r.get("/api/scenario");
    CHECK(now["zones"][5]["beds"] == 15);
    CHECK(now["fingerprint"] == json::parse(res->body)["fingerprint"]);
    // The change is persisted in the state directory.
    CHECK(load_scenario(r.dir.path() / "state" / "scenario.json").scenario.zones[5].beds == 15);
  }

  TEST_CASE("bounds stream as server-sent events") {
    Running r("demo_hospital.json");
    for (bool cached : {false, true}) {
      CAPTURE(cached);
      auto c = r.client();
      auto res = c.Get("/api/bounds");
      REQUIRE(res);
      CHECK(res->status == 200);
      CHECK(res->get_header_value("Content-Type").find("text/event-stream") == 0);
      std::vector<json> bounds;
      json done;
      std::istringstream in(res->body);
      std::string line, event;
      while (std::getline(in, line)) {
        if (line.rfind("event: ", 0) == 0) event = line.substr(7);
        if (line.rfind("data: ", 0) == 0) {
          const json data = json::parse(line.substr(6));
          if (event == "bound") bounds.push_back(data);
          if (event == "done") done = data;
        }
      }
      REQUIRE(bounds.size() == 5);
      for (const auto& b : bounds) CHECK(b["cached"] == cached);
      REQUIRE(done.is_object());
      check_mix(done["bounds"], {25.184, 89.792, 65.477, 105.047, 70}, 0.01);
    }
  }

  TEST_CASE("solve and feasibility") {
    Running r("demo_hospital.json");
    const json p = r.post("/api/solve", {{"mix", {0.05, 0.43, 0.18, 0.09, 0.25}}});
    CHECK(p["status"] == "optimal");
    CHECK(std::abs(p["total"].get<double>() - 113.53) <= 0.05);
    CHECK(p["utilization"].size() == 7);
    CHECK(r.post("/api/feasible", {{"case_mix", kBaseline}})["feasible"] == true);
    const json no = r.post("/api/feasible", {{"case_mix", {80, 0, 0, 0, 0}}});
    CHECK(no["feasible"] == false);
    CHECK_FALSE(no["violated"].empty());
    const json e = r.post("/api/solve", {{"mix", {0.5, 0.5, 0.5, 0, 0}}}, 422);
    CHECK(e["error"]["kind"] == "precondition");
  }

  TEST_CASE("stateless alteration") {
    Running r;
    const json res = r.post("/api/alter", {{"type", "T5"}, {"delta", 3.62}, {"method", "ssq"}, {"baseline", kBaseline}});
    CHECK(res["result"]["status"] == "optimal");
    CHECK(res["result"]["method"] == "ssq");
    CHECK(res["result"]["new_mix"][4].get<double>() == doctest::Approx(32));
    CHECK(res["result"]["objective"].get<double>() > 0);
    CHECK_FALSE(res.contains("session"));
    r.post("/api/alter", {{"type", "T5"}, {"delta", 0}, {"baseline", kBaseline}}, 422);
    r.post("/api/alter", {{"type", "T9"}, {"delta", 1}, {"baseline", kBaseline}}, 400);
    r.post("/api/alter", {{"type", "T5"}, {"delta", 1}, {"method", "cubic"}, {"baseline", kBaseline}}, 400);
  }

  TEST_CASE("session workflow") {
    Running r;
    const json opened = r.post("/api/session", {{"id", "plan-a"}, {"baseline", kBaseline}});
    CHECK(opened["id"] == "plan-a");

    const json p = r.post("/api/alter", {{"session", "plan-a"}, {"type", "T1"}, {"delta", -5.68}, {"method", "eq"}});
    CHECK(p["entry"] == 0);
    check_mix(p["result"]["new_mix"], {0, 49.24, 20.91, 10.71, 28.71}, 0.05);

    const json rejected_first = r.post("/api/alter", {{"session", "plan-a"}, {"type", "T2"}, {"delta", 3}, {"method", "lin"}});
    CHECK(rejected_first["entry"] == 1);
    r.post("/api/decision", {{"session", "plan-a"}, {"entry", 1}, {"decision", "rejected"}});

    const json after = r.post("/api/decision", {{"session", "plan-a"}, {"entry", 0}, {"decision", "accepted"}});
    check_mix(after["current_mix"], {0, 49.24, 20.91, 10.71, 28.71}, 0.05);

    r.post("/api/decision", {{"session", "plan-a"}, {"entry", 0}, {"decision", "rejected"}}, 409);
    r.post("/api/decision", {{"session", "plan-a"}, {"entry", 5}, {"decision", "accepted"}}, 404);
    r.post("/api/decision", {{"session", "plan-a"}, {"entry", 0}, {"decision", "maybe"}}, 400);

    const json s = r.get("/api/session/plan-a");
    REQUIRE(s["history"].size() == 2);
    CHECK(s["history"][0]["decision"] == "accepted");
    CHECK(s["history"][1]["decision"] == "rejected");
    r.get("/api/session/nobody", 404);
    r.post("/api/alter", {{"session", "nobody"}, {"type", "T1"}, {"delta", 1}}, 404);
  }

  TEST_CASE("malformed requests") {
    Running r;
    auto c = r.client();
    auto res = c.Post("/api/alter", "{\"type\": ", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"]["kind"] == "bad_request");
    const json e = r.post("/api/alter", {{"type", "T1"}}, 400);
    CHECK(e["error"]["path"] == "delta");
  }

  TEST_CASE("sub-type alteration endpoint") {
    Running r("demo_hospital.json");
    const json sub = {{3.97, 1.7}, {48.82}, {5.11, 8.17, 7.15}, {10.22}, {28.38}};
    const json res = r.post("/api/alter-subtype", {{"sub_type", "T1-1"}, {"delta", 5}, {"method", "eq"}, {"baseline", sub}});
    CHECK(std::abs(res["result"]["total"].get<double>() - 116.85) <= 0.05);
    CHECK(res["result"]["sub_type"] == 0);
    r.post("/api/alter-subtype", {{"type", "T1"}, {"delta", 5}}, 400);
    r.post("/api/alter-subtype", {{"sub_type", "T1-9"}, {"delta", 5}}, 400);
  }

  TEST_CASE("sweep endpoint") {
    Running r;
    const json rows = r.post("/api/sweep", {{"type", "T5"}, {"method", "lin"}, {"deltas", {1, 2, 99}}, {"baseline", kBaseline}});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["status"] == "optimal");
    CHECK(rows[2]["status"] == "infeasible");
  }

  TEST_CASE("comparison endpoints") {
    Running r("demo_hospital.json");
    const json b = {16.46, 71.67, 11.79, 10.59, 24.39};
    const json cmp = r.post("/api/compare", {{"a", kBaseline}, {"b", b}});
    CHECK(std::abs(cmp["ratio"].get<double>() - 3.465) <= 0.005);
    CHECK(cmp["verdict"] == "second_better");
    const json sub = r.post("/api/compare", {{"a", kBaseline}, {"b", b}, {"subset", {"T3", "T4", "T5"}}});
    CHECK(sub["verdict"] == "first_better");
    CHECK(r.post("/api/compare", {{"a", kBaseline}, {"b", kBaseline}})["ratio"].is_null());
    r.post("/api/compare", {{"a", kBaseline}, {"b", b}, {"normalization", "odd"}}, 400);

    const json eps = {2.5, 9.6, 5.1, 0.5, 7};
    const json sim = r.post("/api/similarity", {{"a", kBaseline}, {"b", b}, {"epsilon", eps}});
    CHECK(sim["los"] == 40.0);
    CHECK(sim["lod"] == 60.0);
    CHECK(sim["significant"] == json{true, true, true, false, false});

    const json prox = r.post("/api/proximity", {{"mix", {5, 5}}, {"ideal", {10, 10}}, {"anti_ideal", {0, 0}}, {"epsilon", {1, 1}}});
    CHECK(prox["proximity"].get<double>() == doctest::Approx(50));
    CHECK(prox["progress"].get<double>() == doctest::Approx(50));
    r.post("/api/proximity", {{"mix", {5}}, {"ideal", {1}}, {"anti_ideal", {1}}, {"epsilon", {1}}}, 422);

    const json bound = r.post("/api/boundary", {{"mix", kBaseline}, {"epsilon", eps}});
    REQUIRE(bound.size() == 5);
    CHECK(bound[0]["inner"]["low"].get<double>() == doctest::Approx(3.18));
    CHECK(bound[4]["inner"]["high"].get<double>() == doctest::Approx(35.38));
  }

  TEST_CASE("parallel sessions do not interfere") {
    Running r;
    std::vector<std::thread> workers;
    for (int i = 0; i < 4; ++i)
      workers.emplace_back([&r, i] {
        const std::string id = "p" + std::to_string(i);
        auto c = r.client();
        c.Post("/api/session", json{{"id", id}, {"baseline", kBaseline}}.dump(), "application/json");
        for (int k = 0; k < 3; ++k)
          c.Post("/api/alter", json{{"session", id}, {"type", "T5"}, {"delta", 1.0 + k}, {"method", "lin"}}.dump(),
                 "application/json");
      });
    for (auto& t : workers) t.join();
    for (int i = 0; i < 4; ++i) {
      const json s = r.get("/api/session/p" + std::to_string(i));
      CHECK(s["history"].size() == 3);
    }
  }

  TEST_CASE("state survives a restart") {
    TempDir dir;
    ServiceConfig c;
    c.scenario_file = data_file("demo_hospital_alteration.json");
    c.state_dir = dir.path();
    c.port = 0;
    {
      Service s(c);
    }
    c.scenario_file.clear();
    Service again(c);
    CHECK(again.bind() > 0);
  }
}
