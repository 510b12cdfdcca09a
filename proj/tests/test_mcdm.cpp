#include <doctest.h>

#include <cmath>
#include <random>

#include "casemix/mcdm.hpp"
#include "support/properties.hpp"

using namespace casemix;

namespace {

const CaseMix kOne{{5.68, 48.82, 20.43, 10.22, 28.38}};
const CaseMix kTwo{{16.46, 71.67, 11.79, 10.59, 24.39}};
const std::vector<double> kBounds = {25.184, 89.792, 65.477, 105.047, 70};
const std::vector<double> kEps = {2.5, 9.6, 5.1, 0.5, 7};

CompareOptions range_options() {
  CompareOptions o;
  o.upper = kBounds;
  return o;
}

}  // namespace

TEST_SUITE("mcdm") {
  TEST_CASE("scaled distance") {
    CHECK(std::abs(scaled_distance(kOne, kTwo, kBounds) - 0.518) <= 0.005);
    CHECK(scaled_distance(kOne, kOne, kBounds) == 0);
    CHECK(scaled_distance(CaseMix{{3}}, CaseMix{{7}}, {2}) == doctest::Approx(2));
    CHECK(scaled_distance(kOne, kTwo, kBounds) == scaled_distance(kTwo, kOne, kBounds));
    CHECK_THROWS(scaled_distance(kOne, CaseMix{{1, 2}}, kBounds));
    CHECK_THROWS(scaled_distance(kOne, kTwo, {1, 1, 0, 1, 1}));
  }

  TEST_CASE("proximity") {
    const CaseMix ideal{{10, 20, 30}}, anti{{0, 5, 60}};
    const std::vector<double> eps = {1, 3, 0.5};
    CHECK(proximity(ideal, ideal, anti, eps) == 0);
    CHECK(proximity(anti, ideal, anti, eps) == doctest::Approx(100));
    CHECK(proximity(CaseMix{{5, 12.5, 45}}, ideal, anti, eps) == doctest::Approx(50));
    CHECK(proximity(CaseMix{{5, 12.5, 45}}, ideal, anti, {7, 7, 7}) == doctest::Approx(50));
    CHECK_THROWS(proximity(ideal, ideal, ideal, eps));
  }

  TEST_CASE("similarity of the two reference mixes") {
    const Similarity r = similarity(kOne, kTwo, kEps);
    CHECK(r.significant == std::vector<bool>{true, true, true, false, false});
    CHECK(r.los == doctest::Approx(40));
    CHECK(r.lod == doctest::Approx(60));
    CHECK_FALSE(r.similar);
  }

  TEST_CASE("identical mixes are fully similar") {
    const Similarity r = similarity(kOne, kOne, kEps);
    CHECK(r.los == 100);
    CHECK(r.lod == 0);
    CHECK(r.similar);
  }

  TEST_CASE("a difference of exactly epsilon is not significant") {
    const CaseMix a{{1, 2, 3}}, b{{1.5, 1, 7}};
    const Similarity r = similarity(a, b, {0.5, 1, 4});
    CHECK(r.similar);
    CHECK(r.los == 100);
  }

  TEST_CASE("level of similarity never falls as epsilon grows") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 200; ++i) {
      CaseMix a{{u(rng), u(rng), u(rng), u(rng)}}, b{{u(rng), u(rng), u(rng), u(rng)}};
      std::vector<double> eps = {u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1};
      const double before = similarity(a, b, eps).los;
      eps[i % 4] *= 1.5;
      CHECK(similarity(a, b, eps).los >= before);
    }
  }

  TEST_CASE("similarity boundary") {
    const auto b = similarity_boundary(kOne, kEps, 1.0, kBounds);
    REQUIRE(b.size() == 5);
    CHECK(b[0].inner.low == doctest::Approx(3.18));
    CHECK(b[0].inner.high == doctest::Approx(8.18));
    CHECK(b[4].inner.low == doctest::Approx(21.38));
    CHECK(b[4].inner.high == doctest::Approx(35.38));

    const auto wide = similarity_boundary(kOne, kEps, 2.0, kBounds);
    CHECK(wide[0].outer.low == doctest::Approx(0.68));
    CHECK(wide[0].outer.high == doctest::Approx(10.68));
    CHECK(similarity_boundary(kOne, kEps, 3.0, kBounds)[0].outer.low == 0);
    CHECK(wide[0].inner.high == doctest::Approx(8.18));

    const auto huge = similarity_boundary(kOne, {1e6, 1e6, 1e6, 1e6, 1e6}, 1.0, kBounds);
    for (std::size_t g = 0; g < 5; ++g) {
      CHECK(huge[g].inner.low == 0);
      CHECK(huge[g].inner.high == kBounds[g]);
      CHECK(huge[g].outer.high == kBounds[g]);
    }
  }

  TEST_CASE("three-type example under upper-bound normalisation") {
    CompareOptions o;
    o.normalization = Normalization::upper_only;
    o.upper = {15, 30, 50};
    o.lower = {0, 0, 3};
    const auto r = compare(CaseMix{{1, 20, 16}}, CaseMix{{10, 5, 35}}, o);
    CHECK(r.deltas[0] == doctest::Approx(0.6));
    CHECK(r.deltas[1] == doctest::Approx(-0.5));
    CHECK(r.deltas[2] == doctest::Approx(0.38));
    CHECK(std::abs(r.gain_norm - 0.71) <= 0.005);
    CHECK(r.loss_norm == doctest::Approx(0.5));
    CHECK(r.verdict == Verdict::second_better);
  }

  TEST_CASE("range normalisation uses the lower bound") {
    CompareOptions o;
    o.upper = {15, 30, 50};
    o.lower = {0, 0, 3};
    const auto r = compare(CaseMix{{1, 20, 16}}, CaseMix{{10, 5, 35}}, o);
    CHECK(r.deltas[2] == doctest::Approx(19.0 / 47));
    o.lower = {0, 0, 50};
    CHECK_THROWS(compare(CaseMix{{1, 20, 16}}, CaseMix{{10, 5, 35}}, o));
  }

  TEST_CASE("five-type comparison") {
    const auto r = compare(kOne, kTwo, range_options());
    CHECK(std::abs(r.gains[0] - 0.43) <= 0.005);
    CHECK(std::abs(r.gains[1] - 0.25) <= 0.005);
    CHECK(r.gains[2] == 0);
    CHECK(std::abs(r.gains[3] - 0.0035) <= 0.0005);
    CHECK(r.gains[4] == 0);
    CHECK(std::abs(r.gain_norm - 0.498) <= 0.0005);
    CHECK(std::abs(r.loss_norm - 0.144) <= 0.0005);
    REQUIRE(r.ratio);
    CHECK(std::abs(*r.ratio - 3.465) <= 0.005);
    CHECK(r.verdict == Verdict::second_better);
    CHECK_FALSE(r.significant);
  }

  TEST_CASE("subset comparison") {
    CompareOptions o = range_options();
    o.subset = {2, 3, 4};
    const auto r = compare(kOne, kTwo, o);
    CHECK(r.deltas[0] == 0);
    CHECK(r.deltas[1] == 0);
    CHECK(std::abs(r.gain_norm - 0.00352) <= 0.00001);
    CHECK(std::abs(r.loss_norm - 0.144) <= 0.0005);
    REQUIRE(r.ratio);
    CHECK(*r.ratio == doctest::Approx(r.gain_norm / r.loss_norm));
    CHECK(r.verdict == Verdict::first_better);
    o.subset = {7};
    CHECK_THROWS(compare(kOne, kTwo, o));
  }

  TEST_CASE("equal mixes have no ratio") {
    const auto r = compare(kOne, kOne, range_options());
    CHECK(r.gain_norm == 0);
    CHECK(r.loss_norm == 0);
    CHECK_FALSE(r.ratio);
    CHECK(r.verdict == Verdict::even);
  }

  TEST_CASE("pure gain is preferred without a ratio") {
    CaseMix b = kOne;
    b[2] += 3;
    const auto r = compare(kOne, b, range_options());
    CHECK_FALSE(r.ratio);
    CHECK(r.verdict == Verdict::second_better);
  }

  TEST_CASE("ratio near one is even") {
    CompareOptions o;
    o.upper = {10, 10};
    CHECK(compare(CaseMix{{5, 5}}, CaseMix{{6, 4.02}}, o).verdict == Verdict::even);
    CHECK(compare(CaseMix{{5, 5}}, CaseMix{{6, 4.5}}, o).verdict == Verdict::second_better);
    CHECK(compare(CaseMix{{5, 5}}, CaseMix{{5.5, 4}}, o).verdict == Verdict::first_better);
    o.tie_tolerance = 0.6;
    CHECK(compare(CaseMix{{5, 5}}, CaseMix{{5.5, 4}}, o).verdict == Verdict::even);
  }

  TEST_CASE("epsilon normalisation marks significant wins") {
    CompareOptions o;
    o.normalization = Normalization::epsilon;
    o.epsilon = kEps;
    const auto r = compare(kOne, kTwo, o);
    CHECK(r.deltas[0] == doctest::Approx((16.46 - 5.68) / 2.5));
    CHECK(r.verdict == Verdict::second_better);
    CHECK(r.significant);

    const auto small = compare(kOne, CaseMix{{5.7, 48.82, 20.43, 10.22, 28.38}}, o);
    CHECK(small.verdict == Verdict::second_better);
    CHECK_FALSE(small.significant);

    o.epsilon.clear();
    CHECK_THROWS(compare(kOne, kTwo, o));
  }

  TEST_CASE("mismatched lengths are rejected") {
    CHECK_THROWS(compare(kOne, CaseMix{{1, 2}}, range_options()));
    CHECK_THROWS(similarity(kOne, CaseMix{{1, 2}}, kEps));
  }

  TEST_CASE("random pairs obey antisymmetry and scale laws") {
    const auto rep = casemix::testing::check_compare_laws(500, 3);
    for (const auto& f : rep.failures) MESSAGE(f);
    CHECK(rep.ok());
    CHECK(rep.cases == 500);
  }
}
