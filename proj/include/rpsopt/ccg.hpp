#pragma once

// Column-and-constraint generation for the regulator / utility / market
// hierarchy: the middle and lower levels are merged through strong duality
// into a bilinear subproblem, and a bilinear master collects one optimality
// cut per stored utility response.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rpsopt/bilinear.hpp"
#include "rpsopt/model.hpp"

namespace rpsopt {

using Idx3 = std::vector<std::vector<std::vector<int>>>;  // [entity][day][period] -> column, -1 if absent

/// Columns of one copy of the market (primal and dual) inside a bilinear program.
struct LlBlock {
  Idx3 g, f, theta;
  Idx3 lambda, xi, gamma_lo, gamma_up, delta_lo, delta_up;
  std::vector<int> duality_rows;  // one per day
  std::vector<std::vector<std::vector<Expr>>> offer;  // [gen][day][period]
  std::vector<std::vector<std::vector<Expr>>> demand;  // [slot][day][period]
};

/// Utility expansion / offer columns plus the market copy they feed.
struct ResponseBlock {
  std::vector<int> gmax;  // [gen], -1 unless candidate
  Idx3 gbar;              // [gen][day][period], -1 when the offer is not a column
  Idx3 p;                 // [slot][day][period]
  LlBlock ll;
};

struct CcgConfig {
  double eps = 1e-3;
  int max_iter = 30;
  MultistartOptions subproblem{40, 1, 100, 1e-8, 1e-7, false};
  MultistartOptions master{40, 2, 100, 1e-8, 1e-7, false};
  double tau_e_max = -1.0;  // $/MWh; negative = largest marginal cost
  double tau_c_max = -1.0;  // $/kW; negative = largest candidate renewable capital cost
  std::optional<double> pin_tau_e;
  std::optional<double> pin_tau_c;  // $/kW
  double time_limit_seconds = 0.0;  // 0 = none
  /// Best-response solves used to complete a sampled regulator decision in the master.
  MultistartOptions completion{4, 3, 100, 1e-8, 1e-7, false};
  int polish_evaluations = 200;  // pattern-search budget on the regulator variables; 0 = off
  std::function<void(const struct CcgIterate&)> on_iterate;
};

struct SubproblemModel {
  BilinearProgram bp;
  ResponseBlock blk;
  RegulatorDecision reg;
};

struct MasterModel {
  BilinearProgram bp;
  ResponseBlock live;
  std::vector<LlBlock> aux;
  std::vector<int> pi_on, pi_off;  // [slot]
  int tau_e = -1;
  int tau_c = -1;  // daily $/MW
  std::vector<int> cut_rows;
  int adequacy_row = -1;
};

/// Utility best response to a fixed regulator decision (max utility profit).
SubproblemModel build_subproblem(const ValidatedInstance& inst, const RegulatorDecision& reg, const CcgConfig& cfg);

/// Regulator problem with one cut per stored utility plan.
MasterModel build_master(const ValidatedInstance& inst, const std::vector<UtilityDecision>& plans,
                         const CcgConfig& cfg);

/// Master point for a fixed regulator decision: the live block holds the
/// utility's best response, auxiliary blocks the stored plans' markets.
/// `warm` (may be empty) seeds the best-response search.
std::vector<double> complete_master_point(const ValidatedInstance& inst, const MasterModel& mp,
                                          const std::vector<UtilityDecision>& plans, const RegulatorDecision& reg,
                                          const CcgConfig& cfg, std::uint64_t seed,
                                          const std::vector<double>& warm = {});

/// Coordinate pattern search on the regulator variables from a feasible
/// master point, each trial completed by complete_master_point. Returns the
/// improved point (or `x` unchanged).
std::vector<double> polish_master(const ValidatedInstance& inst, const MasterModel& mp,
                                  const std::vector<UtilityDecision>& plans, const CcgConfig& cfg,
                                  std::vector<double> x, std::uint64_t seed);

UtilityDecision extract_utility(const ValidatedInstance& inst, const ResponseBlock& blk, const std::vector<double>& x);
MarketOutcome extract_market(const ValidatedInstance& inst, const LlBlock& ll, const std::vector<double>& x);
RegulatorDecision extract_regulator(const ValidatedInstance& inst, const MasterModel& mp, const std::vector<double>& x);

/// Writes a utility decision and market outcome into the columns of a response block.
void fill_response(const ValidatedInstance& inst, const ResponseBlock& blk, const UtilityDecision& util,
                   const MarketOutcome& market, std::vector<double>& x);

struct CcgIterate {
  int iteration = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  RegulatorDecision reg;
  double regulator_objective = 0.0;
  double master_seconds = 0.0;
  double subproblem_seconds = 0.0;
  int master_feasible_starts = 0;
  int subproblem_feasible_starts = 0;
  int master_cols = 0, master_rows = 0;
  int subproblem_cols = 0, subproblem_rows = 0;
};

struct CcgResult {
  bool converged = false;
  std::string status;  // "converged", "max_iter", "time_limit", "stalled"
  int iterations = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  RegulatorDecision reg;
  UtilityDecision util;
  MarketOutcome market;
  double regulator_objective = 0.0;
  double utility_objective = 0.0;
  std::vector<CcgIterate> log;
  std::vector<UtilityDecision> plans;  // plans in the final master
  std::vector<double> master_point;    // final master solution
  double seconds = 0.0;
};

/// Relative gap between the subproblem value (upper) and the master's utility value (lower).
double ccg_gap(double upper, double lower);

CcgResult run_ccg(const ValidatedInstance& inst, const CcgConfig& cfg);

/// Column bounds shared by the decomposition and the grid oracle.
double dual_price_bound(const ValidatedInstance& inst);     // |lambda| <= this
double dual_limit_bound(const ValidatedInstance& inst);     // gamma <= this
double candidate_capacity_cap(const ValidatedInstance& inst, int gen);
double energy_incentive_cap(const ValidatedInstance& inst, const CcgConfig& cfg);
double capacity_incentive_cap(const ValidatedInstance& inst, const CcgConfig& cfg);  // $/kW

}  // namespace rpsopt
