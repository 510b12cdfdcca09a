#pragma once

#include <cstddef>
#include <vector>

#include "casemix/lp.hpp"

namespace casemix {

// Piecewise-linear approximation of x² on [0, 1] with `segments` equal pieces.
// Breakpoints are b_i = i / segments, slopes are the secants between them.
struct PwlSquare {
  std::vector<double> breakpoints;  // segments + 1 values, 0 .. 1
  std::vector<double> slopes;       // one per segment

  std::size_t segments() const { return slopes.size(); }
  double eval(double x) const;
  // Value of the chord between breakpoints `lo` and `hi` at x.
  double chord(std::size_t lo, std::size_t hi, double x) const;
  // Index of the segment containing x (the left one at a breakpoint).
  std::size_t segment_of(double x) const;
};

// `interior` is the number of interior breakpoints, so the approximation has
// interior + 1 segments.
PwlSquare build_square_pwl(std::size_t interior);

struct PwlBlock {
  VarId y;                    // approximates x²
  std::vector<VarId> pieces;  // one per segment, 0 <= piece <= width
};

// Adds y ≈ x² for x in [0, 1] using one bounded variable per segment:
// x = Σ pieces, y = Σ slope·piece. Exact at an optimum only when the pieces
// fill in order, which holds when y carries a non-negative cost under
// minimisation.
PwlBlock add_pwl_variable(LinearProgram& lp, VarId x, const PwlSquare& pwl,
                          const std::string& name);

}  // namespace casemix
