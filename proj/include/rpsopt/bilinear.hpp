#pragma once

// Programs with bilinear terms x_a * x_b whose factors sit in two column
// blocks, so fixing either block leaves a linear program. Convex terms
// (Euclidean norms and squares) may appear on the left of <= rows and are
// handled by outer approximation.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rpsopt/lp.hpp"

namespace rpsopt {

enum class Block : char { A, B, Shared };

/// Affine-plus-bilinear expression over program columns.
struct Expr {
  double constant = 0.0;
  std::map<int, double> linear;
  std::map<std::pair<int, int>, double> products;  // key ordered (min, max); (a, a) is a square

  Expr& add(int col, double coef);
  Expr& add_constant(double c);
  Expr& add_product(int a, int b, double coef);
  /// Adds coef * (u * v) for two affine expressions (their products must be bilinear).
  Expr& add_affine_product(const Expr& u, const Expr& v, double coef);
  Expr& add_expr(const Expr& other, double coef = 1.0);
  bool is_affine() const { return products.empty(); }
  double evaluate(const std::vector<double>& x) const;
};

struct BilinearTerm {
  int a = 0;
  int b = 0;
  double coef = 0.0;
};

/// coef * sqrt(constant + sum (w_j x_j)^2) or coef * x_var^2 on the left of a <= row.
struct ConvexTerm {
  enum class Kind { Norm, Square };
  Kind kind = Kind::Norm;
  int row = 0;
  double coef = 0.0;  // >= 0
  double constant = 0.0;
  std::vector<std::pair<int, double>> weights;  // Norm
  int var = -1;                                  // Square

  double value(const std::vector<double>& x) const;
};

class BilinearProgram {
 public:
  LpProblem linear;
  std::vector<BilinearTerm> objective_terms;
  std::vector<std::pair<int, BilinearTerm>> row_terms;  // (row, term)
  std::vector<ConvexTerm> convex_terms;
  std::vector<Block> block;
  std::vector<int> tie_break_columns;

  /// Problem-specific completion of a sampled point into a (near) feasible one.
  std::function<std::optional<std::vector<double>>(const std::vector<double>&)> repair;
  std::vector<std::vector<double>> warm_starts;

  int add_column(const std::string& name, double lb, double ub, Block b, double cost = 0.0);
  void set_objective(Sense sense, const Expr& e);
  int add_row(const std::string& name, RowType type, double rhs, const Expr& e);
  void add_norm_term(int row, double coef, double constant, std::vector<std::pair<int, double>> weights);

  int num_cols() const { return linear.num_cols(); }
  int num_rows() const { return linear.num_rows(); }
  int num_bilinear_terms() const { return static_cast<int>(objective_terms.size() + row_terms.size()); }

  double objective(const std::vector<double>& x) const;
  /// Signed violation per row (0 when satisfied), scaled by 1 + |rhs|.
  std::vector<double> row_violations(const std::vector<double>& x) const;
  double max_violation(const std::vector<double>& x) const;
  double row_lhs(int row, const std::vector<double>& x) const;

  /// Throws std::invalid_argument when some product lies within one block.
  void check_blocks() const;
};

class BilinearInfeasible : public std::runtime_error {
 public:
  BilinearInfeasible(const std::string& what, std::vector<std::pair<std::string, double>> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<std::pair<std::string, double>>& residuals() const { return residuals_; }

 private:
  std::vector<std::pair<std::string, double>> residuals_;
};

struct SolveReport {
  bool feasible = false;
  double best_objective = 0.0;
  std::vector<double> point;
  std::vector<std::vector<double>> trajectories;  // objective per alternation round, per start
  double relaxation_bound = 0.0;
  bool has_bound = false;
  double certified_gap = 0.0;
  bool gap_flagged = false;  // node budget exhausted before the target gap
  long nodes = 0;
  int feasible_starts = 0;
};

struct MultistartOptions {
  int starts = 300;
  std::uint64_t seed = 1;
  int max_rounds = 100;
  double improvement_tol = 1e-8;
  double feasibility_tol = 1e-7;
  bool keep_trajectories = true;
};

/// Alternating block LPs from corner, warm and random starts; returns the best feasible point.
SolveReport solve_multistart(const BilinearProgram& bp, const MultistartOptions& opt);

/// Alternation from one starting point. Returns nullopt when no feasible point is reached.
std::optional<std::vector<double>> alternate_from(const BilinearProgram& bp, std::vector<double> start,
                                                  const MultistartOptions& opt, std::vector<double>* trajectory = nullptr);

/// Solves a program without products over all columns at once (convex terms by outer approximation).
/// `near` seeds the first tangent cuts. Returns nullopt when infeasible.
std::optional<std::vector<double>> solve_convex(const BilinearProgram& bp, const std::vector<double>& near);

struct McCormickRelaxation {
  LpProblem lp;
  struct Product {
    int a, b, w;
  };
  std::vector<Product> products;
  std::vector<std::pair<int, int>> convex_aux;  // (convex term index, auxiliary column)
};

/// McCormick envelopes for every product over the column bounds of bp (or `lower`/`upper` when given),
/// tangent planes for convex terms. Throws if a participating column is unbounded.
McCormickRelaxation mccormick_relax(const BilinearProgram& bp, const std::vector<double>* lower = nullptr,
                                    const std::vector<double>* upper = nullptr);

struct BranchAndBoundOptions {
  double rel_gap = 1e-6;
  long node_budget = 2000;
  MultistartOptions local{8, 1, 100, 1e-8, 1e-7, false};
};

SolveReport spatial_branch_and_bound(const BilinearProgram& bp, const BranchAndBoundOptions& opt);

}  // namespace rpsopt
