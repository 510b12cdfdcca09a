#include "casemix/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace casemix {

PwlSquare build_square_pwl(std::size_t interior) {
  if (interior == 0) throw std::invalid_argument("at least one interior breakpoint is needed");
  PwlSquare pwl;
  const std::size_t n = interior + 1;
  pwl.breakpoints.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    pwl.breakpoints[i] = static_cast<double>(i) / static_cast<double>(n);
  pwl.breakpoints[n] = 1.0;
  pwl.slopes.resize(n);
  // (b1² - b0²) / (b1 - b0) = b0 + b1
  for (std::size_t i = 0; i < n; ++i) pwl.slopes[i] = pwl.breakpoints[i] + pwl.breakpoints[i + 1];
  return pwl;
}

std::size_t PwlSquare::segment_of(double x) const {
  const std::size_t n = segments();
  if (x <= 0.0) return 0;
  if (x >= 1.0) return n - 1;
  auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - breakpoints.begin());
  return std::min(n - 1, k == 0 ? 0 : k - 1);
}

double PwlSquare::eval(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  const std::size_t k = segment_of(x);
  const double b0 = breakpoints[k];
  return b0 * b0 + slopes[k] * (x - b0);
}

double PwlSquare::chord(std::size_t lo, std::size_t hi, double x) const {
  const double a = breakpoints.at(lo);
  const double b = breakpoints.at(hi);
  if (hi == lo) return a * a;
  return a * a + (a + b) * (x - a);
}

PwlBlock add_pwl_variable(LinearProgram& lp, VarId x, const PwlSquare& pwl,
                          const std::string& name) {
  if (pwl.segments() == 0) throw std::invalid_argument("piecewise approximation has no segments");
  const Variable& xv = lp.variable(x);
  if (xv.lower < 0.0 || xv.upper > 1.0)
    throw std::invalid_argument("variable " + xv.name + " must be bounded within [0, 1]");
  PwlBlock block;
  block.y = lp.add_variable(name + "_sq", 0.0, 1.0);
  std::vector<Term> link{{x, 1.0}};
  std::vector<Term> value{{block.y, 1.0}};
  for (std::size_t i = 0; i < pwl.segments(); ++i) {
    const double width = pwl.breakpoints[i + 1] - pwl.breakpoints[i];
    VarId piece = lp.add_variable(name + "_s" + std::to_string(i), 0.0, width);
    block.pieces.push_back(piece);
    link.push_back({piece, -1.0});
    value.push_back({piece, -pwl.slopes[i]});
  }
  lp.add_constraint(link, Relation::equal, 0.0, name + "_fill");
  lp.add_constraint(value, Relation::equal, 0.0, name + "_value");
  return block;
}

}  // namespace casemix
