#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "casemix/alteration.hpp"
#include "fixtures.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace casemix;
using namespace casemix::testing;

namespace {

struct Fixture {
  StoredScenario st = alteration_demo();
  TypeBounds bounds = scenario_bounds(st);
  const Scenario& s() const { return st.scenario; }
};

AlterationRequest request(std::size_t type, double delta, Method m) {
  AlterationRequest r;
  r.type = type;
  r.delta = delta;
  r.method = m;
  r.baseline = demo_baseline();
  return r;
}

void check_mix(const CaseMix& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t g = 0; g < want.size(); ++g) {
    CAPTURE(g);
    CHECK(std::abs(got[g] - want[g]) <= tol);
  }
}

double sum(const std::vector<double>& v) {
  double t = 0;
  for (double x : v) t += x;
  return t;
}

// Two wards. Type A splits evenly into A-1 (10 h, ward 1 only) and A-2 (20 h,
// either ward); type B is a 15 h stay in ward 2.
Scenario two_type_toy() {
  Scenario s;
  s.zones = {{"W1", ZoneKind::ward, 1, 168}, {"W2", ZoneKind::ward, 1, 168}};
  s.patient_types = {
      {"A", 0.5,
       {{"A-1", 0.5, {{ZoneKind::ward, 10, {"W1"}}}}, {"A-2", 0.5, {{ZoneKind::ward, 20, {"W1", "W2"}}}}},
       std::nullopt},
      {"B", 0.5, {{"B-1", 1.0, {{ZoneKind::ward, 15, {"W2"}}}}}, std::nullopt}};
  return s;
}

}  // namespace

TEST_SUITE("alteration") {
  TEST_CASE("equitable removal of T1") {
    Fixture f;
    const auto r = alter_type(f.s(), f.bounds, request(0, -5.68, Method::eq));
    REQUIRE(r.ok());
    check_mix(r.new_mix, {0, 49.24, 20.91, 10.71, 28.71}, 0.05);
    CHECK(std::abs(r.total - 109.57) <= 0.05);
    CHECK(std::abs(r.total_impact - 1.71) <= 0.05);
    CHECK(r.gamma[0] == 0);
  }

  TEST_CASE("equitable growth of T5 empties T4") {
    Fixture f;
    const auto r = alter_type(f.s(), f.bounds, request(4, 57.9 - 28.38, Method::eq));
    REQUIRE(r.ok());
    CHECK(std::abs(r.lambda - 0.0982) <= 5e-4);
    CHECK(r.objective == r.lambda);
    check_mix(r.new_mix, {3.21, 40, 10.27, 0, 57.9}, 0.05);
    // T4 hits zero before its full λ share.
    CHECK(r.gamma[3] < r.lambda);
    CHECK(r.gamma[3] == doctest::Approx(10.22 / 105.046896).epsilon(1e-6));
  }

  TEST_CASE("linear removal of T1") {
    Fixture f;
    const auto r = alter_type(f.s(), f.bounds, request(0, -5.68, Method::lin));
    REQUIRE(r.ok());
    CHECK(std::abs(r.total - 110.73) <= 0.05);
    CHECK(std::abs(r.objective - 0.03) <= 0.005);
    CHECK(check_feasibility(f.s(), r.new_mix).feasible);
    for (std::size_t g = 1; g < 5; ++g) CHECK(r.new_mix[g] >= demo_baseline()[g] - 1e-9);
  }

  TEST_CASE("squares growth of T5") {
    Fixture f;
    const auto r = alter_type(f.s(), f.bounds, request(4, 3.62, Method::ssq));
    REQUIRE(r.ok());
    check_mix(r.new_mix, {5.63, 48.28, 18.78, 9.23, 32}, 0.1);
    CHECK(std::abs(r.total - 113.92) <= 0.1);
    double sq = 0;
    for (double g : r.gamma) sq += g * g;
    CHECK(r.objective == doctest::Approx(sq));
    CHECK_FALSE(r.approximate);
  }

  TEST_CASE("out-of-range and zero changes are rejected") {
    Fixture f;
    CHECK_THROWS_AS(alter_type(f.s(), f.bounds, request(0, 0.0, Method::eq)), PreconditionError);
    CHECK_THROWS_AS(alter_type(f.s(), f.bounds, request(0, -6.0, Method::lin)), PreconditionError);
    CHECK_THROWS_AS(alter_type(f.s(), f.bounds, request(4, 42.0, Method::ssq)), PreconditionError);
    CHECK_THROWS_AS(alter_type(f.s(), f.bounds, request(9, 1.0, Method::eq)), PreconditionError);
    auto r = request(4, 1.0, Method::ssq);
    r.options.breakpoints = 0;
    CHECK_THROWS_AS(alter_type(f.s(), f.bounds, r), PreconditionError);
  }

  TEST_CASE("sweep keeps order and reports bad rows in place") {
    Fixture f;
    CHECK(sweep(f.s(), f.bounds, request(4, 0, Method::lin), {}).empty());
    const auto rows = sweep(f.s(), f.bounds, request(4, 0, Method::lin), {5, -5, 99, 10});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].delta == 5);
    CHECK(rows[1].delta == -5);
    CHECK_FALSE(rows[2].ok());
    CHECK(rows[2].message.find("outside") != std::string::npos);
    CHECK(rows[3].ok());
    CHECK(rows[3].new_mix[4] == doctest::Approx(38.38));
  }

  TEST_CASE("unscaled moves are raw patient counts") {
    Fixture f;
    auto req = request(4, 3.62, Method::lin);
    req.options.scaled = false;
    const auto r = alter_type(f.s(), f.bounds, req);
    REQUIRE(r.ok());
    for (std::size_t g = 0; g < 4; ++g) CHECK(r.gamma[g] == doctest::Approx(demo_baseline()[g] - r.new_mix[g]));
    CHECK(r.objective == doctest::Approx(sum(r.gamma)));
  }

  TEST_CASE("strict and relaxed equitable forms agree when strict is feasible") {
    Fixture f;
    std::size_t compared = 0;
    for (std::size_t g = 0; g < 5; ++g)
      for (double frac : {0.1, 0.3, 0.6}) {
        const double room = f.bounds.type[g] - demo_baseline()[g];
        for (double d : {frac * room, -frac * demo_baseline()[g]}) {
          auto req = request(g, d, Method::eq);
          const auto relaxed = alter_type(f.s(), f.bounds, req);
          req.options.strict_eq = true;
          const auto strict = alter_type(f.s(), f.bounds, req);
          if (!strict.ok()) continue;
          CAPTURE(g);
          CAPTURE(d);
          REQUIRE(relaxed.ok());
          CHECK(relaxed.lambda == doctest::Approx(strict.lambda).epsilon(1e-6).scale(1));
          ++compared;
        }
      }
    CHECK(compared > 0);
  }

  TEST_CASE("linear score orders the three methods for increases") {
    Fixture f;
    for (const auto& [g, d] : std::vector<std::pair<std::size_t, double>>{{4, 3.62}, {4, 20}, {1, 10}, {2, 15}, {0, 8}}) {
      CAPTURE(g);
      CAPTURE(d);
      const auto lin = alter_type(f.s(), f.bounds, request(g, d, Method::lin));
      const auto ssq = alter_type(f.s(), f.bounds, request(g, d, Method::ssq));
      const auto eq = alter_type(f.s(), f.bounds, request(g, d, Method::eq));
      REQUIRE(lin.ok());
      REQUIRE(ssq.ok());
      REQUIRE(eq.ok());
      CHECK(sum(lin.gamma) <= sum(ssq.gamma) + 1e-7);
      CHECK(sum(ssq.gamma) <= sum(eq.gamma) + 1e-7);
    }
  }

  TEST_CASE("squares decrease matches segment enumeration") {
    // Three types, few breakpoints, so every segment combination can be tried.
    Scenario s = demo();
    s.patient_types = {s.patient_types[0], s.patient_types[1], s.patient_types[4]};
    s.patient_types[0].mix_fraction = 0.2;
    s.patient_types[1].mix_fraction = 0.5;
    s.patient_types[2].mix_fraction = 0.3;
    const TypeBounds b = resolve_bounds(s);
    const PlanResult plan = max_throughput(s, s.type_mix());
    REQUIRE(plan.ok());
    for (std::size_t breakpoints : {2, 4, 7})
      for (std::size_t g = 0; g < 3; ++g)
        for (double frac : {0.25, 0.7, 1.0}) {
          AlterationRequest req;
          req.type = g;
          req.method = Method::ssq;
          req.baseline = plan.case_mix;
          req.delta = -frac * plan.case_mix[g];
          req.options.breakpoints = breakpoints;
          CAPTURE(breakpoints);
          CAPTURE(g);
          CAPTURE(frac);
          const auto r = alter_type(s, b, req);
          REQUIRE(r.ok());
          CHECK_FALSE(r.approximate);
          const double want = ssq_decrease_by_segments(s, b.type, req);
          CHECK(ssq_pwl_objective(b.type, req, r.new_mix) == doctest::Approx(want).epsilon(1e-7).scale(1));
        }
  }

  TEST_CASE("sub-type alteration from the reference sub mix") {
    StoredScenario st = load_scenario(data_file("demo_hospital.json"));
    const TypeBounds b = scenario_bounds(st);
    SubtypeAlterationRequest req;
    req.type = 0;
    req.sub_type = 0;
    req.delta = 5;
    req.method = Method::eq;
    req.baseline = SubMix{{{3.97, 1.7}, {48.82}, {5.11, 8.17, 7.15}, {10.22}, {28.38}}};
    const auto r = alter_subtype(st.scenario, b, req);
    REQUIRE(r.ok());
    CHECK(r.new_sub_mix.values[0][0] == doctest::Approx(8.97));
    CHECK(std::abs(r.total - 116.85) <= 0.05);
    check_mix(r.new_mix, {10.29, 48.54, 19.96, 9.9, 28.16}, 0.05);
    CHECK(r.sub_gamma[0][0] == 0);
  }

  TEST_CASE("a sub-type can be eliminated") {
    StoredScenario st = load_scenario(data_file("demo_hospital.json"));
    const TypeBounds b = scenario_bounds(st);
    for (Method m : {Method::eq, Method::lin, Method::ssq}) {
      SubtypeAlterationRequest req;
      req.type = 2;
      req.sub_type = 1;
      req.method = m;
      req.baseline = proportional_sub_mix(st.scenario, demo_baseline());
      req.delta = -req.baseline.values[2][1];
      const auto r = alter_subtype(st.scenario, b, req);
      REQUIRE(r.ok());
      CHECK(r.new_sub_mix.values[2][1] == 0.0);
    }
  }

  TEST_CASE("sub-type alteration matches a grid search on a toy hospital") {
    const Scenario s = two_type_toy();
    const TypeBounds b = resolve_bounds(s);
    REQUIRE(b.sub_type[0][0] == doctest::Approx(16.8));
    REQUIRE(b.sub_type[0][1] == doctest::Approx(16.8));
    REQUIRE(b.sub_type[1][0] == doctest::Approx(11.2));

    // A-1 goes from 4 to 16, taking 160 of ward 1's 168 hours; A-2 (3) and
    // B-1 (9) must give up 19 hours between them.
    const double a2_base = 3, b1_base = 9;
    auto treatable = [](double a2, double b1) { return 20 * a2 + 15 * b1 <= 176 + 1e-9 && 15 * b1 <= 168 + 1e-9; };
    auto grid_best = [&](const std::function<double(double, double)>& score) {
      double best = kInfinity;
      for (int i = 0; i <= 300; ++i)
        for (int j = 0; j <= 900; ++j) {
          const double a2 = i * 0.01, b1 = j * 0.01;
          if (treatable(a2, b1)) best = std::min(best, score((a2_base - a2) / 16.8, (b1_base - b1) / 11.2));
        }
      return best;
    };

    SubtypeAlterationRequest req;
    req.type = 0;
    req.sub_type = 0;
    req.delta = 12;
    req.baseline = SubMix{{{4, a2_base}, {b1_base}}};

    struct Case {
      Method method;
      std::function<double(double, double)> score;
      double resolution;
    };
    const std::vector<Case> cases = {
        {Method::lin, [](double x, double y) { return x + y; }, 2e-3},
        {Method::eq, [](double x, double y) { return std::max(x, y); }, 2e-3},
        {Method::ssq, [](double x, double y) { return x * x + y * y; }, 2e-4},
    };
    for (const auto& c : cases) {
      CAPTURE(to_string(c.method));
      req.method = c.method;
      const auto r = alter_subtype(s, b, req);
      REQUIRE(r.ok());
      const double grid = grid_best(c.score);
      CHECK(r.objective <= grid + 1e-6);
      CHECK(r.objective >= grid - c.resolution);
      CHECK(r.new_sub_mix.values[0][0] == doctest::Approx(16));
      CHECK(treatable(r.new_sub_mix.values[0][1], r.new_sub_mix.values[1][0]));
    }
  }

  TEST_CASE("random alterations obey anchor, direction and move laws") {
    const auto rep = check_alteration_laws(60, 7);
    for (const auto& f : rep.failures) MESSAGE(f);
    CHECK(rep.ok());
    CHECK(rep.cases > 40);
  }
}
