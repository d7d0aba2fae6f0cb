#pragma once

// Linear programs and a dense bounded-variable revised simplex that returns
// primal values, row duals and reduced costs.
//
// Sign conventions: duals[i] = d(objective)/d(rhs_i) and
// reduced_costs[j] = d(objective)/d(x_j) at the optimal basis, in the sense
// of the problem as posed (maximisation or minimisation).

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rpsopt/model.hpp"

namespace rpsopt {

enum class Sense { Minimize, Maximize };
enum class RowType { Le, Ge, Eq };
enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpRow {
  std::string name;
  RowType type = RowType::Eq;
  double rhs = 0.0;
  std::vector<int> idx;
  std::vector<double> val;
};

class LpProblem {
 public:
  Sense sense = Sense::Minimize;
  double objective_offset = 0.0;

  int add_column(const std::string& name, double lb, double ub, double cost = 0.0);
  int add_row(const std::string& name, RowType type, double rhs, std::vector<int> idx = {},
              std::vector<double> val = {});
  /// Adds coefficient to an existing row (summing duplicates at solve time).
  void add_coef(int row, int col, double v);

  int num_cols() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  const std::string& col_name(int j) const { return col_names_[static_cast<std::size_t>(j)]; }
  double cost(int j) const { return cost_[static_cast<std::size_t>(j)]; }
  double lower(int j) const { return lb_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return ub_[static_cast<std::size_t>(j)]; }
  void set_cost(int j, double c) { cost_[static_cast<std::size_t>(j)] = c; }
  void set_bounds(int j, double lb, double ub);
  const LpRow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  LpRow& row(int i) { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<LpRow>& rows() const { return rows_; }

  /// Index lookups by name; -1 when absent.
  int find_column(const std::string& name) const;
  int find_row(const std::string& name) const;

  /// Checks finiteness, bound order and name uniqueness. Throws std::invalid_argument.
  void validate() const;

  double row_activity(int i, const std::vector<double>& x) const;
  double objective_value(const std::vector<double>& x) const;

 private:
  std::vector<std::string> col_names_;
  std::vector<double> cost_, lb_, ub_;
  std::vector<LpRow> rows_;
  std::unordered_map<std::string, int> col_index_, row_index_;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  long iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

/// Raised when the simplex loses numerical control (singular basis, iteration limit).
class LpNumericalError : public std::runtime_error {
 public:
  LpNumericalError(const std::string& what, double condition_hint)
      : std::runtime_error(what), condition_hint_(condition_hint) {}
  double condition_hint() const { return condition_hint_; }

 private:
  double condition_hint_;
};

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 80;
  int degenerate_limit = 50;  // Dantzig steps before falling back to Bland's rule
  long max_iterations = 0;    // 0 = automatic
};

LpSolution solve_lp(const LpProblem& p, const LpOptions& opt = {});

/// Maximum bound or row violation of x, scaled by 1 + |bound|.
double primal_infeasibility(const LpProblem& p, const std::vector<double>& x);

/// CPLEX-LP text with 17 significant digits.
std::string to_lp_format(const LpProblem& p);

/// Prints a double with 17 significant digits.
std::string format_exact(double v);

}  // namespace rpsopt
