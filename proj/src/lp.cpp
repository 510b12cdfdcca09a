#include "casemix/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <utility>

namespace casemix {

VarId LinearProgram::add_variable(std::string name, double lower, double upper) {
  vars_.push_back({std::move(name), lower, upper, 0.0});
  return VarId{vars_.size() - 1};
}

RowId LinearProgram::add_constraint(const std::vector<Term>& terms, Relation relation,
                                    double rhs, std::string name) {
  Constraint row;
  row.name = std::move(name);
  row.relation = relation;
  row.rhs = rhs;
  // Merge repeated variables so each appears once.
  for (const Term& t : terms) {
    auto it = std::find_if(row.terms.begin(), row.terms.end(),
                           [&](const Term& e) { return e.var.index == t.var.index; });
    if (it == row.terms.end())
      row.terms.push_back(t);
    else
      it->coef += t.coef;
  }
  rows_.push_back(std::move(row));
  return RowId{rows_.size() - 1};
}

void LinearProgram::set_objective(VarId var, double coef) { vars_.at(var.index).objective = coef; }

void LinearProgram::clear_objective() {
  for (auto& v : vars_) v.objective = 0.0;
}

void LinearProgram::set_bounds(VarId var, double lower, double upper) {
  auto& v = vars_.at(var.index);
  v.lower = lower;
  v.upper = upper;
}

std::vector<std::string> LinearProgram::validate() const {
  std::vector<std::string> problems;
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || std::isnan(v.objective))
      problems.push_back("variable " + v.name + " has NaN data");
    else if (v.lower > v.upper)
      problems.push_back("variable " + v.name + " has lower bound above upper bound");
    else if (v.lower == kInfinity || v.upper == -kInfinity)
      problems.push_back("variable " + v.name + " has an unattainable bound");
  }
  for (const auto& r : rows_) {
    if (!std::isfinite(r.rhs)) problems.push_back("row " + r.name + " has a non-finite rhs");
    for (const auto& t : r.terms) {
      if (t.var.index >= vars_.size())
        problems.push_back("row " + r.name + " references an unknown variable");
      else if (!std::isfinite(t.coef))
        problems.push_back("row " + r.name + " has a non-finite coefficient");
    }
  }
  return problems;
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible:
      return "infeasible";
    case LpStatus::unbounded:
      return "unbounded";
    case LpStatus::numerical_failure:
      return "numerical_failure";
  }
  return "numerical_failure";
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    const auto& v = lp.variables()[j];
    worst = std::max(worst, v.lower - x[j]);
    worst = std::max(worst, x[j] - v.upper);
  }
  for (const auto& r : lp.constraints()) {
    double lhs = 0.0;
    for (const auto& t : r.terms) lhs += t.coef * x[t.var.index];
    const double scale = std::max(1.0, std::abs(r.rhs));
    double gap = 0.0;
    if (r.relation != Relation::greater_equal) gap = std::max(gap, lhs - r.rhs);
    if (r.relation != Relation::less_equal) gap = std::max(gap, r.rhs - lhs);
    worst = std::max(worst, gap / scale);
  }
  return worst;
}

namespace {

// How an original variable maps onto non-negative internal columns.
enum class Map { shifted, mirrored, split };

struct VarMap {
  Map kind = Map::shifted;
  std::size_t col = 0;  // second column of a split is col + 1
  double offset = 0.0;  // lower bound (shifted) or upper bound (mirrored)
};

enum class ColState { basic, at_lower, at_upper };

struct Column {
  std::vector<std::pair<std::size_t, double>> entries;
  double upper = kInfinity;
  bool artificial = false;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {}

  LpSolution run();

 private:
  void build();
  bool refactor();
  void compute_primal();
  // Returns false on iteration limit or numerical trouble; sets outcome_.
  bool iterate(const std::vector<double>& cost, bool phase_one);
  void pivot(std::size_t r, std::size_t q, const std::vector<double>& w);
  void drive_out_artificials();
  double nonbasic_value(std::size_t j) const {
    return state_[j] == ColState::at_upper ? cols_[j].upper : 0.0;
  }

  const LinearProgram& lp_;
  const SolverOptions& opt_;

  std::size_t m_ = 0;
  std::vector<Column> cols_;
  std::vector<double> b_;
  std::vector<VarMap> map_;
  std::vector<double> cost_;  // phase-two cost, minimisation form
  double cost_offset_ = 0.0;

  std::vector<std::size_t> head_;
  std::vector<ColState> state_;
  std::vector<double> binv_;  // row-major m x m
  std::vector<double> xb_;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
  LpStatus outcome_ = LpStatus::optimal;
  std::string message_;
};

void Simplex::build() {
  const auto& vars = lp_.variables();
  const auto& rows = lp_.constraints();
  m_ = rows.size();
  const double sign = lp_.sense() == Sense::maximize ? -1.0 : 1.0;

  map_.resize(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    VarMap vm;
    vm.col = cols_.size();
    if (std::isfinite(v.lower)) {
      vm.kind = Map::shifted;
      vm.offset = v.lower;
      Column c;
      c.upper = v.upper - v.lower;
      cols_.push_back(c);
      cost_.push_back(sign * v.objective);
      cost_offset_ += sign * v.objective * v.lower;
    } else if (std::isfinite(v.upper)) {
      vm.kind = Map::mirrored;
      vm.offset = v.upper;
      cols_.push_back(Column{});
      cost_.push_back(-sign * v.objective);
      cost_offset_ += sign * v.objective * v.upper;
    } else {
      vm.kind = Map::split;
      cols_.push_back(Column{});
      cols_.push_back(Column{});
      cost_.push_back(sign * v.objective);
      cost_.push_back(-sign * v.objective);
    }
    map_[j] = vm;
  }

  b_.assign(m_, 0.0);
  std::vector<double> row_sign(m_, 1.0);
  for (std::size_t i = 0; i < m_; ++i) {
    double rhs = rows[i].rhs;
    for (const auto& t : rows[i].terms) {
      const VarMap& vm = map_[t.var.index];
      if (vm.kind != Map::split) rhs -= t.coef * vm.offset;
    }
    row_sign[i] = rhs < 0.0 ? -1.0 : 1.0;
    b_[i] = row_sign[i] * rhs;
    for (const auto& t : rows[i].terms) {
      if (t.coef == 0.0) continue;
      const VarMap& vm = map_[t.var.index];
      const double a = row_sign[i] * t.coef;
      switch (vm.kind) {
        case Map::shifted:
          cols_[vm.col].entries.emplace_back(i, a);
          break;
        case Map::mirrored:
          cols_[vm.col].entries.emplace_back(i, -a);
          break;
        case Map::split:
          cols_[vm.col].entries.emplace_back(i, a);
          cols_[vm.col + 1].entries.emplace_back(i, -a);
          break;
      }
    }
  }

  head_.assign(m_, 0);
  for (std::size_t i = 0; i < m_; ++i) {
    const Relation rel = rows[i].relation;
    if (rel != Relation::equal) {
      const double slack_sign = (rel == Relation::less_equal ? 1.0 : -1.0) * row_sign[i];
      Column c;
      c.entries.emplace_back(i, slack_sign);
      cols_.push_back(c);
      cost_.push_back(0.0);
      if (slack_sign > 0.0) {
        head_[i] = cols_.size() - 1;
        continue;
      }
    }
    Column art;
    art.entries.emplace_back(i, 1.0);
    art.artificial = true;
    cols_.push_back(art);
    cost_.push_back(0.0);
    head_[i] = cols_.size() - 1;
  }

  state_.assign(cols_.size(), ColState::at_lower);
  for (std::size_t i = 0; i < m_; ++i) state_[head_[i]] = ColState::basic;
  binv_.assign(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
  xb_ = b_;
}

bool Simplex::refactor() {
  // Gauss-Jordan on [B | I] with partial pivoting.
  std::vector<double> a(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i)
    for (const auto& [r, v] : cols_[head_[i]].entries) a[r * m_ + i] = v;
  std::vector<double> inv(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
  for (std::size_t c = 0; c < m_; ++c) {
    std::size_t p = c;
    double best = std::abs(a[c * m_ + c]);
    for (std::size_t r = c + 1; r < m_; ++r) {
      if (std::abs(a[r * m_ + c]) > best) {
        best = std::abs(a[r * m_ + c]);
        p = r;
      }
    }
    if (best < 1e-12) return false;
    if (p != c) {
      for (std::size_t k = 0; k < m_; ++k) {
        std::swap(a[p * m_ + k], a[c * m_ + k]);
        std::swap(inv[p * m_ + k], inv[c * m_ + k]);
      }
    }
    const double piv = a[c * m_ + c];
    for (std::size_t k = 0; k < m_; ++k) {
      a[c * m_ + k] /= piv;
      inv[c * m_ + k] /= piv;
    }
    for (std::size_t r = 0; r < m_; ++r) {
      if (r == c) continue;
      const double f = a[r * m_ + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) {
        a[r * m_ + k] -= f * a[c * m_ + k];
        inv[r * m_ + k] -= f * inv[c * m_ + k];
      }
    }
  }
  // Row i of B^-1 corresponds to basis position i.
  binv_ = std::move(inv);
  since_refactor_ = 0;
  compute_primal();
  return true;
}

void Simplex::compute_primal() {
  std::vector<double> rhs = b_;
  for (std::size_t j = 0; j < cols_.size(); ++j) {
    if (state_[j] != ColState::at_upper) continue;
    for (const auto& [r, v] : cols_[j].entries) rhs[r] -= v * cols_[j].upper;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    double s = 0.0;
    const double* row = &binv_[i * m_];
    for (std::size_t k = 0; k < m_; ++k) s += row[k] * rhs[k];
    xb_[i] = s;
  }
}

void Simplex::pivot(std::size_t r, std::size_t q, const std::vector<double>& w) {
  const double piv = w[r];
  double* prow = &binv_[r * m_];
  for (std::size_t k = 0; k < m_; ++k) prow[k] /= piv;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r || w[i] == 0.0) continue;
    const double f = w[i];
    double* row = &binv_[i * m_];
    for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
  }
  head_[r] = q;
  state_[q] = ColState::basic;
}

bool Simplex::iterate(const std::vector<double>& cost, bool phase_one) {
  std::vector<double> y(m_), w(m_);
  std::size_t degenerate_streak = 0;
  const double dtol = opt_.optimality_tolerance;
  const double ptol = opt_.pivot_tolerance;

  while (true) {
    if (iterations_ >= opt_.iteration_limit) {
      outcome_ = LpStatus::numerical_failure;
      message_ = "iteration limit reached";
      return false;
    }
    if (since_refactor_ >= opt_.refactor_interval && !refactor()) {
      outcome_ = LpStatus::numerical_failure;
      message_ = "basis became singular";
      return false;
    }
    const bool bland = degenerate_streak >= opt_.bland_threshold;

    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[head_[i]];
      if (cb == 0.0) continue;
      const double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) y[k] += cb * row[k];
    }

    // Pricing.
    std::size_t q = cols_.size();
    double best = 0.0;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      if (state_[j] == ColState::basic) continue;
      if (cols_[j].upper <= 0.0) continue;  // fixed at zero
      double d = cost[j];
      for (const auto& [r, v] : cols_[j].entries) d -= y[r] * v;
      double gain = 0.0;
      if (state_[j] == ColState::at_lower && d < -dtol) gain = -d;
      if (state_[j] == ColState::at_upper && d > dtol) gain = d;
      if (gain <= 0.0) continue;
      if (bland) {
        q = j;
        break;
      }
      if (gain > best) {
        best = gain;
        q = j;
      }
    }
    if (q == cols_.size()) return true;

    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& [r, v] : cols_[q].entries)
      for (std::size_t i = 0; i < m_; ++i) w[i] += binv_[i * m_ + r] * v;

    // x_B(theta) = x_B - dir * theta * w
    const double dir = state_[q] == ColState::at_lower ? 1.0 : -1.0;
    double theta = cols_[q].upper;
    std::size_t leave = m_;
    bool leave_to_upper = false;
    for (std::size_t i = 0; i < m_; ++i) {
      const double dw = dir * w[i];
      if (std::abs(dw) <= ptol) continue;
      double limit;
      bool to_upper;
      if (dw > 0.0) {
        limit = std::max(0.0, xb_[i]) / dw;
        to_upper = false;
      } else {
        const double ub = cols_[head_[i]].upper;
        if (!std::isfinite(ub)) continue;
        limit = std::max(0.0, ub - xb_[i]) / -dw;
        to_upper = true;
      }
      const double tie = 1e-12 * std::max(1.0, limit);
      bool take = false;
      if (limit < theta - tie)
        take = true;
      else if (limit <= theta + tie)
        take = leave == m_ || (bland ? head_[i] < head_[leave]
                                     : std::abs(w[i]) > std::abs(w[leave]));
      if (take) {
        theta = std::min(theta, limit);
        leave = i;
        leave_to_upper = to_upper;
      }
    }

    if (leave == m_ && !std::isfinite(theta)) {
      if (phase_one) {
        outcome_ = LpStatus::numerical_failure;
        message_ = "unbounded ray in phase one";
        return false;
      }
      outcome_ = LpStatus::unbounded;
      return false;
    }

    ++iterations_;
    ++since_refactor_;
    degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;

    for (std::size_t i = 0; i < m_; ++i) xb_[i] -= dir * theta * w[i];

    if (leave == m_) {
      // Bound flip: the entering column crosses its whole range.
      state_[q] = state_[q] == ColState::at_lower ? ColState::at_upper : ColState::at_lower;
      continue;
    }

    const double entering_value =
        state_[q] == ColState::at_lower ? theta : cols_[q].upper - theta;
    const std::size_t out = head_[leave];
    pivot(leave, q, w);
    xb_[leave] = entering_value;
    state_[out] = leave_to_upper ? ColState::at_upper : ColState::at_lower;
  }
}

void Simplex::drive_out_artificials() {
  for (std::size_t r = 0; r < m_; ++r) {
    if (!cols_[head_[r]].artificial) continue;
    const double* row = &binv_[r * m_];
    std::size_t best_col = cols_.size();
    double best = 1e-7;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      if (state_[j] == ColState::basic || cols_[j].artificial) continue;
      double alpha = 0.0;
      for (const auto& [i, v] : cols_[j].entries) alpha += row[i] * v;
      if (std::abs(alpha) > best) {
        best = std::abs(alpha);
        best_col = j;
      }
    }
    if (best_col == cols_.size()) continue;  // redundant row
    std::vector<double> w(m_, 0.0);
    for (const auto& [i, v] : cols_[best_col].entries)
      for (std::size_t k = 0; k < m_; ++k) w[k] += binv_[k * m_ + i] * v;
    const double value = nonbasic_value(best_col);
    const std::size_t out = head_[r];
    pivot(r, best_col, w);
    xb_[r] = value;
    state_[out] = ColState::at_lower;
  }
}

LpSolution Simplex::run() {
  LpSolution sol;
  build();

  bool any_artificial = false;
  for (const auto& c : cols_) any_artificial = any_artificial || c.artificial;

  if (any_artificial) {
    std::vector<double> phase_cost(cols_.size(), 0.0);
    for (std::size_t j = 0; j < cols_.size(); ++j)
      if (cols_[j].artificial) phase_cost[j] = 1.0;
    if (!iterate(phase_cost, true)) {
      sol.status = outcome_;
      sol.message = message_;
      sol.iterations = iterations_;
      return sol;
    }
    if (!refactor()) {
      sol.status = LpStatus::numerical_failure;
      sol.message = "singular basis after phase one";
      return sol;
    }
    double infeasibility = 0.0;
    double scale = 1.0;
    for (double v : b_) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < m_; ++i)
      if (cols_[head_[i]].artificial) infeasibility += std::max(0.0, xb_[i]);
    if (infeasibility > opt_.feasibility_tolerance * scale) {
      sol.status = LpStatus::infeasible;
      sol.iterations = iterations_;
      sol.message = "phase one ended with infeasibility " + std::to_string(infeasibility);
      return sol;
    }
    drive_out_artificials();
    for (auto& c : cols_)
      if (c.artificial) c.upper = 0.0;
    if (!refactor()) {
      sol.status = LpStatus::numerical_failure;
      sol.message = "singular basis after removing artificials";
      return sol;
    }
  }

  if (!iterate(cost_, false)) {
    sol.status = outcome_;
    sol.message = message_;
    sol.iterations = iterations_;
    return sol;
  }
  if (!refactor()) {
    sol.status = LpStatus::numerical_failure;
    sol.message = "singular final basis";
    return sol;
  }

  std::vector<double> col_value(cols_.size(), 0.0);
  for (std::size_t j = 0; j < cols_.size(); ++j)
    if (state_[j] != ColState::basic) col_value[j] = nonbasic_value(j);
  for (std::size_t i = 0; i < m_; ++i) {
    double v = xb_[i];
    const double ub = cols_[head_[i]].upper;
    if (v < 0.0 && v > -1e-9) v = 0.0;
    if (v > ub && v < ub + 1e-9) v = ub;
    col_value[head_[i]] = v;
  }

  const auto& vars = lp_.variables();
  sol.values.assign(vars.size(), 0.0);
  sol.objective = 0.0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const VarMap& vm = map_[j];
    double x = 0.0;
    switch (vm.kind) {
      case Map::shifted:
        x = vm.offset + col_value[vm.col];
        break;
      case Map::mirrored:
        x = vm.offset - col_value[vm.col];
        break;
      case Map::split:
        x = col_value[vm.col] - col_value[vm.col + 1];
        break;
    }
    x = std::clamp(x, vars[j].lower, vars[j].upper);
    sol.values[j] = x;
    sol.objective += vars[j].objective * x;
  }
  sol.iterations = iterations_;

  const double viol = max_violation(lp_, sol.values);
  if (viol > opt_.feasibility_tolerance) {
    sol.status = LpStatus::numerical_failure;
    sol.message = "final point violates constraints by " + std::to_string(viol);
    return sol;
  }
  sol.status = LpStatus::optimal;
  return sol;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options) {
  auto problems = lp.validate();
  if (!problems.empty()) {
    LpSolution sol;
    sol.status = LpStatus::numerical_failure;
    sol.message = "invalid program: " + problems.front();
    return sol;
  }
  for (const auto& v : lp.variables()) {
    if (v.lower > v.upper) {
      LpSolution sol;
      sol.status = LpStatus::infeasible;
      sol.message = "empty bounds on " + v.name;
      return sol;
    }
  }
  Simplex simplex(lp, options);
  return simplex.run();
}

namespace {

void write_number(std::ostream& out, double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  out << s.str();
}

std::string var_name(const LinearProgram& lp, std::size_t j) {
  const auto& n = lp.variables()[j].name;
  return n.empty() ? "x" + std::to_string(j) : n;
}

void write_terms(std::ostream& out, const LinearProgram& lp, const std::vector<Term>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0.0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    if (std::abs(t.coef) != 1.0) {
      write_number(out, std::abs(t.coef));
      out << ' ';
    }
    out << var_name(lp, t.var.index);
    first = false;
  }
  if (first) out << "0";
}

}  // namespace

void write_lp_text(const LinearProgram& lp, std::ostream& out) {
  out << (lp.sense() == Sense::maximize ? "Maximize" : "Minimize") << "\n obj: ";
  std::vector<Term> obj;
  for (std::size_t j = 0; j < lp.variable_count(); ++j)
    if (lp.variables()[j].objective != 0.0) obj.push_back({VarId{j}, lp.variables()[j].objective});
  write_terms(out, lp, obj);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.constraint_count(); ++i) {
    const auto& r = lp.constraints()[i];
    out << ' ' << (r.name.empty() ? "c" + std::to_string(i) : r.name) << ": ";
    write_terms(out, lp, r.terms);
    out << (r.relation == Relation::less_equal ? " <= "
                                               : r.relation == Relation::equal ? " = " : " >= ");
    write_number(out, r.rhs);
    out << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    const auto& v = lp.variables()[j];
    out << ' ';
    if (std::isfinite(v.lower)) {
      write_number(out, v.lower);
      out << " <= ";
    } else {
      out << "-inf <= ";
    }
    out << var_name(lp, j);
    if (std::isfinite(v.upper)) {
      out << " <= ";
      write_number(out, v.upper);
    }
    out << '\n';
  }
  out << "End\n";
}

}  // namespace casemix
