#pragma once

// Domain types shared by every layer of the tri-level policy model:
// network, generators, demand, representative days, policy parameters and
// the decision blocks of the regulator, the utility and the wholesale market.

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpsopt {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-day, per-period matrix indexed [day][period].
using DayPeriod = std::vector<std::vector<double>>;

struct Node {
  std::string id;
  int state = 0;
  double interface_max = 0.0;  // P_n^{down,max}, MVA
};

struct Line {
  std::string id;
  int from = 0;  // sending node o(l)
  int to = 0;    // receiving node r(l)
  double reactance = 0.0;
  double flow_max = 0.0;
};

struct Network {
  std::vector<std::string> states;
  std::vector<Node> nodes;
  std::vector<Line> lines;
};

enum class GenStatus { Existing, Candidate };
enum class GenTech { Renewable, Controllable };

struct Generator {
  std::string id;
  int node = 0;
  GenStatus status = GenStatus::Existing;
  GenTech tech = GenTech::Controllable;
  std::string fuel;

  double g_min = 0.0;  // existing only
  double g_max = 0.0;  // existing only
  double ramp_min = -kInf;  // H_min, MW per interval (<= 0 for downward)
  double ramp_max = kInf;   // H_max
  double min_output_factor = 0.0;  // Gamma, candidate controllable
  double cost = 0.0;               // C_g, $/MWh
  double capital_cost = 0.0;       // C_inv, $/MW (undiscounted overnight cost)
  double build_max = kInf;         // candidate capacity cap, MW

  DayPeriod forecast;    // rho, renewable only
  DayPeriod error_mean;  // upsilon, renewable only
  DayPeriod error_sd;    // sigma, renewable only

  bool is_renewable() const { return tech == GenTech::Renewable; }
  bool is_candidate() const { return status == GenStatus::Candidate; }
};

struct DemandModel {
  std::vector<DayPeriod> inflexible;        // D [node][day][period], MW
  std::vector<DayPeriod> utility_intercept;  // M [node][day][period], $/MWh
  double utility_slope = 0.25;               // N
  std::vector<std::vector<double>> response_offset;  // delta pi [node][period], may be empty
};

struct RepDaySet {
  std::vector<double> weights;  // omega_e
  int hours = 0;                // |T|
  std::vector<int> source_days;  // medoid day index per representative, optional
};

struct PolicyParams {
  int strategic_state = 0;
  double rps_fraction = 0.0;  // kappa_s
  double budget = kInf;       // B^P_s, $ per day
  std::vector<bool> on_peak;  // per period
  double eta = 0.03;
  double ccg_tolerance = 1e-3;
  int recovery_years = 10;
  double discount_rate = 0.05;
};

struct Instance {
  std::string name;
  Network network;
  std::vector<Generator> generators;
  DemandModel demand;
  RepDaySet days;
  PolicyParams policy;
  std::vector<std::vector<double>> participation;  // alpha [generator][period], empty = default
};

/// One violated invariant, addressed by a JSON-pointer-like path.
struct ValidationIssue {
  std::string path;
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// An instance whose invariants hold, with the index maps every model
/// builder needs. Immutable after construction.
class ValidatedInstance {
 public:
  const Instance& raw() const { return inst_; }
  const Network& network() const { return inst_.network; }
  const std::vector<Generator>& generators() const { return inst_.generators; }
  const Generator& generator(int i) const { return inst_.generators[static_cast<std::size_t>(i)]; }
  const DemandModel& demand() const { return inst_.demand; }
  const PolicyParams& policy() const { return inst_.policy; }

  int num_nodes() const { return static_cast<int>(inst_.network.nodes.size()); }
  int num_lines() const { return static_cast<int>(inst_.network.lines.size()); }
  int num_generators() const { return static_cast<int>(inst_.generators.size()); }
  int num_days() const { return static_cast<int>(inst_.days.weights.size()); }
  int num_periods() const { return inst_.days.hours; }
  double day_weight(int e) const { return inst_.days.weights[static_cast<std::size_t>(e)]; }

  int strategic_state() const { return inst_.policy.strategic_state; }
  const std::vector<int>& strategic_nodes() const { return strategic_nodes_; }
  /// Position of a node in strategic_nodes(), or -1.
  int strategic_slot(int node) const { return strategic_slot_[static_cast<std::size_t>(node)]; }
  bool is_strategic_node(int node) const { return strategic_slot(node) >= 0; }

  const std::vector<int>& generators_at(int node) const { return gens_at_node_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& nodes_in_state(int s) const { return nodes_in_state_[static_cast<std::size_t>(s)]; }
  int state_of_generator(int i) const;

  /// Generators owned by the strategic utility (every generator in the strategic state).
  const std::vector<int>& utility_generators() const { return utility_gens_; }
  bool is_utility_generator(int i) const { return is_utility_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& utility_renewables() const { return utility_renewables_; }
  const std::vector<int>& utility_controllables() const { return utility_controllables_; }
  const std::vector<int>& candidates() const { return candidates_; }
  const std::vector<int>& candidate_renewables() const { return candidate_renewables_; }

  double inflexible_demand(int node, int day, int t) const;
  double utility_intercept(int node, int day, int t) const;
  double response_offset(int node, int t) const;
  double utility_slope() const { return inst_.demand.utility_slope; }
  bool on_peak(int t) const { return inst_.policy.on_peak[static_cast<std::size_t>(t)]; }

  /// Prorated daily capital cost, $/MW-day.
  double daily_capital_cost(int i) const { return daily_capital_[static_cast<std::size_t>(i)]; }
  /// Daily $/MW equivalent of a lump-sum capacity incentive quoted in $/kW.
  double capacity_incentive_daily(double tau_c_per_kw) const;
  double capacity_incentive_per_kw(double tau_c_daily) const;

  double participation(int i, int t) const {
    return alpha_[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
  }
  double largest_marginal_cost() const { return max_cost_; }

  /// Highest tariff keeping flexible demand within the demand model's support at a node.
  double tariff_ceiling(int node) const;

 private:
  friend ValidatedInstance validate_instance(Instance raw);
  explicit ValidatedInstance(Instance inst) : inst_(std::move(inst)) {}

  Instance inst_;
  std::vector<int> strategic_nodes_;
  std::vector<int> strategic_slot_;
  std::vector<std::vector<int>> gens_at_node_;
  std::vector<std::vector<int>> nodes_in_state_;
  std::vector<int> utility_gens_;
  std::vector<char> is_utility_;
  std::vector<int> utility_renewables_;
  std::vector<int> utility_controllables_;
  std::vector<int> candidates_;
  std::vector<int> candidate_renewables_;
  std::vector<double> daily_capital_;
  std::vector<std::vector<double>> alpha_;
  double max_cost_ = 0.0;
};

/// Checks every invariant and builds the index maps. Throws ValidationError
/// listing all violations.
ValidatedInstance validate_instance(Instance raw);

/// Capital cost spread into equal daily payments: annual annuity over
/// `years` at `rate`, divided by 365.
double prorate_capital(double capital_cost, int years, double rate);

/// Closed-form flexible demand (M - pi - dpi) / N clamped to [0, M/N].
double demand_from_tariff(double intercept, double slope, double tariff, double offset = 0.0);

/// Tariffs and incentives set by the state regulator.
struct RegulatorDecision {
  std::vector<double> pi_on;   // per strategic node, $/MWh
  std::vector<double> pi_off;  // per strategic node, $/MWh
  double tau_e = 0.0;          // $/MWh
  double tau_c = 0.0;          // $/kW, lump sum

  double tariff(const ValidatedInstance& inst, int slot, int t) const {
    return inst.on_peak(t) ? pi_on[static_cast<std::size_t>(slot)] : pi_off[static_cast<std::size_t>(slot)];
  }
};

/// Expansion and market-participation plan of the strategic utility.
struct UtilityDecision {
  std::vector<double> capacity;                // g_max per generator (0 unless candidate)
  std::vector<DayPeriod> offers;               // g-bar [generator][day][period]
  std::vector<DayPeriod> interface_flow;       // p-down [strategic slot][day][period]
  std::vector<DayPeriod> demand;               // d [strategic slot][day][period]
};

/// Primal-dual pair of the wholesale market for every representative day.
struct MarketOutcome {
  std::vector<DayPeriod> dispatch;   // g [generator][day][period]
  std::vector<DayPeriod> flow;       // f [line][day][period]
  std::vector<DayPeriod> angle;      // theta [node][day][period]
  std::vector<DayPeriod> lmp;        // lambda [node][day][period]
  std::vector<DayPeriod> flow_dual;  // xi [line][day][period]
  std::vector<DayPeriod> gen_lower_dual, gen_upper_dual;    // gamma
  std::vector<DayPeriod> flow_lower_dual, flow_upper_dual;  // delta
  std::vector<double> primal_objective;  // O^W_e
  std::vector<double> dual_objective;    // O^DW_e
};

/// Flexible demand implied by a regulator decision, [slot][day][period].
std::vector<DayPeriod> flexible_demand(const ValidatedInstance& inst, const RegulatorDecision& reg);

/// Wholesale demand seen at a node: flexible on strategic nodes, inflexible elsewhere.
double market_demand(const ValidatedInstance& inst, const std::vector<DayPeriod>& flexible, int node,
                     int day, int t);

/// Demand-weighted mean over strategic nodes of the time-averaged tariff.
double average_tariff(const ValidatedInstance& inst, const RegulatorDecision& reg);

/// Regulator objective (consumer payment on inflexible demand plus incentive cost).
double regulator_objective(const ValidatedInstance& inst, const RegulatorDecision& reg,
                           const UtilityDecision& util, const MarketOutcome& market);

/// Utility profit evaluated on a market outcome.
double utility_objective(const ValidatedInstance& inst, const RegulatorDecision& reg,
                         const UtilityDecision& util, const MarketOutcome& market);

/// Renewable energy dispatched in the strategic state on one day, MWh.
double state_renewable_energy(const ValidatedInstance& inst, const MarketOutcome& market, int day);

/// Inflexible consumption of the strategic state on one day, MWh.
double state_inflexible_energy(const ValidatedInstance& inst, int day);

/// Policy spending on one day: energy incentive plus daily capacity incentive.
double policy_spending(const ValidatedInstance& inst, const RegulatorDecision& reg,
                       const UtilityDecision& util, const MarketOutcome& market, int day);

}  // namespace rpsopt
