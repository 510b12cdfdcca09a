#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace casemix {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VarId {
  std::size_t index = 0;
};

struct RowId {
  std::size_t index = 0;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

enum class Relation { less_equal, equal, greater_equal };
enum class Sense { minimize, maximize };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  double objective = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // one entry per variable, in insertion order
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

// A linear program in row form. Variables and constraints are referenced by
// the handles returned when they are added.
class LinearProgram {
 public:
  VarId add_variable(std::string name, double lower = 0.0, double upper = kInfinity);
  RowId add_constraint(const std::vector<Term>& terms, Relation relation, double rhs,
                       std::string name = {});

  void set_sense(Sense sense) { sense_ = sense; }
  void set_objective(VarId var, double coef);
  void clear_objective();
  void set_bounds(VarId var, double lower, double upper);

  Sense sense() const { return sense_; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Variable& variable(VarId v) const { return vars_.at(v.index); }
  std::size_t variable_count() const { return vars_.size(); }
  std::size_t constraint_count() const { return rows_.size(); }

  // Structural problems: NaN data, lower > upper, unknown variables.
  std::vector<std::string> validate() const;

 private:
  Sense sense_ = Sense::minimize;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  double objective = 0.0;
  std::vector<double> values;
  std::size_t iterations = 0;
  std::string message;

  bool optimal() const { return status == LpStatus::optimal; }
  double value(VarId v) const { return values.at(v.index); }
};

struct SolverOptions {
  double feasibility_tolerance = 1e-7;
  double optimality_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  std::size_t refactor_interval = 64;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t bland_threshold = 50;
  std::size_t iteration_limit = 200000;
};

// Bounded-variable revised primal simplex, two phases. Deterministic: ties are
// broken by the lowest column index.
LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

// Largest violation of any row or bound by `values`.
double max_violation(const LinearProgram& lp, const std::vector<double>& values);

// Human-readable dump in the common LP text format.
void write_lp_text(const LinearProgram& lp, std::ostream& out);

}  // namespace casemix
