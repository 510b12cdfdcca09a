#include <doctest.h>

#include <random>

#include "casemix/pwl.hpp"
#include <stdexcept>
#include "support/properties.hpp"

using namespace casemix;

namespace {

double min_square(double x_fixed, std::size_t interior) {
  LinearProgram lp;
  VarId x = lp.add_variable("x", x_fixed, x_fixed);
  PwlBlock b = add_pwl_variable(lp, x, build_square_pwl(interior), "sq");
  lp.set_objective(b.y, 1.0);
  LpSolution s = solve_lp(lp);
  REQUIRE(s.optimal());
  return s.value(b.y);
}

}  // namespace

TEST_SUITE("pwl") {
  TEST_CASE("one interior breakpoint") {
    PwlSquare p = build_square_pwl(1);
    REQUIRE(p.breakpoints.size() == 3);
    CHECK(p.breakpoints[0] == 0.0);
    CHECK(p.breakpoints[1] == 0.5);
    CHECK(p.breakpoints[2] == 1.0);
    CHECK(p.slopes[0] == doctest::Approx(0.5));
    CHECK(p.slopes[1] == doctest::Approx(1.5));
  }

  TEST_CASE("zero interior breakpoints is rejected") { CHECK_THROWS_AS(build_square_pwl(0), std::invalid_argument); }

  TEST_CASE("exact at every breakpoint, slopes increasing") {
    PwlSquare p = build_square_pwl(500);
    CHECK(p.segments() == 501);
    for (std::size_t i = 0; i < p.breakpoints.size(); ++i)
      CHECK(p.eval(p.breakpoints[i]) == doctest::Approx(p.breakpoints[i] * p.breakpoints[i]).epsilon(1e-15));
    for (std::size_t i = 1; i < p.slopes.size(); ++i) CHECK(p.slopes[i] > p.slopes[i - 1]);
  }

  TEST_CASE("error bound at 500 breakpoints") {
    const double err = testing::pwl_max_error(500);
    CHECK(err <= 2.5e-6);
    // Chord error of x² on a segment of width h peaks at h²/4.
    CHECK(err == doctest::Approx(0.25 / (501.0 * 501.0)).epsilon(1e-6));
  }

  TEST_CASE("chord over a window matches the secant") {
    PwlSquare p = build_square_pwl(9);
    // window [0.2, 0.6]
    CHECK(p.chord(2, 6, 0.4) == doctest::Approx(0.04 + (0.36 - 0.04) / 0.4 * 0.2));
    CHECK(p.segment_of(0.0) == 0);
    CHECK(p.segment_of(0.35) == 3);
    CHECK(p.segment_of(1.0) == 9);
  }

  TEST_CASE("minimised square fills segments in order") {
    CHECK(min_square(0.5, 500) == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(min_square(0.0, 500) == doctest::Approx(0.0));
    CHECK(min_square(1.0, 500) == doctest::Approx(1.0));
  }

  TEST_CASE("minimised square equals the interpolant at random points") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PwlSquare p = build_square_pwl(40);
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      CHECK(std::abs(min_square(x, 40) - p.eval(x)) <= 1e-7);
    }
  }

  TEST_CASE("x outside [0, 1] is rejected") {
    LinearProgram lp;
    VarId x = lp.add_variable("x", 0, 2);
    CHECK_THROWS_AS(add_pwl_variable(lp, x, build_square_pwl(3), "sq"), std::invalid_argument);
  }
}
