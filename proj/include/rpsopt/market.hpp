#pragma once

// Wholesale market (DC-OPF) in primal and dual form for one representative day.

#include <vector>

#include "rpsopt/lp.hpp"
#include "rpsopt/model.hpp"

namespace rpsopt {

/// Offers [generator][period] and demand [strategic slot][period] for one day.
struct MarketInput {
  int day = 0;
  std::vector<std::vector<double>> offers;
  std::vector<std::vector<double>> demand;
  std::vector<int> periods;  // empty = every period of the day
};

struct LlPrimal {
  LpProblem lp;
  std::vector<int> periods;
  // indexed [entity][k] where k indexes `periods`
  std::vector<std::vector<int>> g, f, theta;
  std::vector<std::vector<int>> flow_row, balance_row;
};

struct LlDual {
  LpProblem lp;
  std::vector<int> periods;
  std::vector<std::vector<int>> lambda, xi, gamma_lo, gamma_up, delta_lo, delta_up;
};

/// Lowest-index node of every connected component; these carry theta = 0.
std::vector<int> reference_nodes(const ValidatedInstance& inst);

/// max -sum C g subject to DC flow definition, nodal balance, offer and line limits.
LlPrimal build_ll_primal(const ValidatedInstance& inst, const MarketInput& in);

/// min sum gbar*gamma_up - sum Dem*lambda + sum F*(delta_up + delta_lo) over the dual rows.
LlDual build_ll_dual(const ValidatedInstance& inst, const MarketInput& in);

double strong_duality_gap(const LpSolution& primal, const LpSolution& dual);

/// One day of market results with the duals read off the primal solve.
struct DayMarket {
  LpStatus status = LpStatus::Infeasible;
  std::vector<std::vector<double>> g, f, theta;  // [entity][k]
  std::vector<std::vector<double>> lambda, xi, gamma_lo, gamma_up, delta_lo, delta_up;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
};

/// Solves the primal and maps the LP duals onto the market's dual variables.
DayMarket solve_day_market(const ValidatedInstance& inst, const MarketInput& in);

/// Offers of generators outside the utility: full capacity (times the forecast for renewables).
double nonstrategic_offer(const ValidatedInstance& inst, int gen, int day, int t);

/// Offers of every generator for one day; utility offers come from the decision.
std::vector<std::vector<double>> day_offers(const ValidatedInstance& inst, const UtilityDecision& util, int day);

/// Market outcome for every day under a utility decision. Throws if some day is infeasible.
MarketOutcome solve_market(const ValidatedInstance& inst, const UtilityDecision& util);

/// Dual objective value of a market outcome for one day.
double market_dual_objective(const ValidatedInstance& inst, const UtilityDecision& util, const MarketOutcome& m,
                             int day);
double market_primal_objective(const ValidatedInstance& inst, const MarketOutcome& m, int day);

}  // namespace rpsopt
