#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "casemix/scenario.hpp"

namespace casemix {

// Euclidean distance with each component divided by its scale.
double scaled_distance(const CaseMix& a, const CaseMix& b, const std::vector<double>& scale);

struct Similarity {
  std::vector<bool> significant;  // |a - b| > ε for that type
  double los = 100.0;             // percent of types that are not significant
  double lod = 0.0;               // 100 - los
  bool similar = true;            // no type is significant
};

Similarity similarity(const CaseMix& a, const CaseMix& b, const std::vector<double>& epsilon);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct Boundary {
  Interval inner;  // [n - ε, n + ε], the similar region
  Interval outer;  // [n - λε, n + λε]
};

// Both intervals are clamped to [0, upper].
std::vector<Boundary> similarity_boundary(const CaseMix& mix, const std::vector<double>& epsilon,
                                          double lambda, const std::vector<double>& upper);

// Distance to the ideal as a percentage of the ideal-to-anti-ideal distance.
double proximity(const CaseMix& mix, const CaseMix& ideal, const CaseMix& anti_ideal,
                 const std::vector<double>& epsilon);

enum class Normalization {
  range,       // divide differences by (upper - lower)
  upper_only,  // divide differences by upper, ignoring lower
  epsilon,     // divide differences by ε
};

struct CompareOptions {
  Normalization normalization = Normalization::range;
  std::vector<double> lower;    // empty means all zero
  std::vector<double> upper;    // required for range and upper_only
  std::vector<double> epsilon;  // required for epsilon
  std::vector<std::size_t> subset;  // types compared; empty means all
  double tie_tolerance = 0.05;      // |R - 1| at most this counts as even
};

enum class Verdict { first_better, second_better, even };

const char* to_string(Verdict v);

// Weighs how much `b` gains over `a` against how much it loses.
struct CompareResult {
  std::vector<double> gains;   // V⁺, zero where b is not larger
  std::vector<double> losses;  // V⁻, positive magnitudes
  std::vector<double> deltas;  // normalised b - a, zero outside the subset
  double gain_norm = 0.0;      // 𝒢⁺
  double loss_norm = 0.0;      // 𝒢⁻
  std::optional<double> ratio;  // 𝒢⁺ / 𝒢⁻, empty when nothing is lost
  Verdict verdict = Verdict::even;
  // Only set for epsilon normalisation: the preferred mix wins by more than ε
  // on at least one type.
  bool significant = false;
};

CompareResult compare(const CaseMix& a, const CaseMix& b, const CompareOptions& options);

}  // namespace casemix
