#pragma once

// Brute-force reference solver for desk-sized instances: enumerates utility
// plans on a grid, solves the market LP for each, and searches regulator
// decisions on a refined grid.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpsopt/ccg.hpp"
#include "rpsopt/model.hpp"

namespace rpsopt {

struct GridSpec {
  int capacity_points = 21;  // per candidate, evenly spaced over [0, cap]
  /// Explicit capacity values per candidate (indexed like inst.candidates()); overrides capacity_points.
  std::vector<std::vector<double>> capacity_values;
  int offer_levels = 3;  // evenly spaced over the feasible offer interval of each controllable

  int regulator_points = 9;  // per axis on the coarse pass
  int refine_levels = 4;     // each level halves the span around the incumbent
  int refine_points = 5;
  /// Explicit regulator axes; an empty axis is gridded over its box.
  std::vector<double> pi_on_values, pi_off_values, tau_e_values, tau_c_values;
  std::optional<double> pin_tau_e;
  std::optional<double> pin_tau_c;  // $/kW
  double tau_e_max = -1.0;          // negative = same default as the C&CG master
  double tau_c_max = -1.0;
  double tie_tol = 1e-7;
};

struct UtilityResponse {
  UtilityDecision util;
  MarketOutcome market;
  double objective = 0.0;
  long plans_evaluated = 0;
};

struct OracleStats {
  long regulator_points = 0;
  long feasible = 0;
  long no_response = 0;
  long rps_violations = 0;
  long budget_violations = 0;
  long adequacy_violations = 0;
  long market_solves = 0;
};

struct OracleResult {
  RegulatorDecision reg;
  UtilityResponse response;
  double regulator_objective = 0.0;
  OracleStats stats;
  GridSpec grid;
};

class OracleInfeasible : public std::runtime_error {
 public:
  OracleInfeasible(const std::string& what, OracleStats stats) : std::runtime_error(what), stats_(stats) {}
  const OracleStats& stats() const { return stats_; }

 private:
  OracleStats stats_;
};

/// Best utility plan on the grid for a fixed regulator decision. Throws
/// std::runtime_error if no grid plan is feasible.
UtilityResponse best_utility_response(const ValidatedInstance& inst, const RegulatorDecision& reg, const GridSpec& grid = {});

/// Regulator grid search over tariffs and incentives. Throws OracleInfeasible.
OracleResult grid_search_trilevel(const ValidatedInstance& inst, const GridSpec& grid = {});

}  // namespace rpsopt
