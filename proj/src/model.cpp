#include "rpsopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace rpsopt {

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::ostringstream os;
  os << "instance validation failed (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << ")";
  for (const auto& is : issues) os << "\n  " << is.path << ": " << is.message;
  return os.str();
}

std::string at(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

// Checks a [day][period] matrix for shape and value range.
void check_day_period(const DayPeriod& m, int days, int hours, double lo, double hi, const std::string& path,
                      std::vector<ValidationIssue>& out) {
  if (static_cast<int>(m.size()) != days) {
    out.push_back({path, "expected " + std::to_string(days) + " days, found " + std::to_string(m.size())});
    return;
  }
  for (std::size_t e = 0; e < m.size(); ++e) {
    if (static_cast<int>(m[e].size()) != hours) {
      out.push_back({at(path, e), "expected " + std::to_string(hours) + " periods"});
      continue;
    }
    for (std::size_t t = 0; t < m[e].size(); ++t) {
      double v = m[e][t];
      if (!std::isfinite(v) || v < lo || v > hi) {
        std::ostringstream os;
        os << "value " << v << " outside [" << lo << ", " << hi << "]";
        out.push_back({at(at(path, e), t), os.str()});
      }
    }
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

double prorate_capital(double capital_cost, int years, double rate) {
  if (years < 1) throw std::invalid_argument("prorate_capital: years must be >= 1");
  if (rate < 0) throw std::invalid_argument("prorate_capital: rate must be >= 0");
  if (rate == 0.0) return capital_cost / (static_cast<double>(years) * 365.0);
  double annuity = capital_cost * rate / (1.0 - std::pow(1.0 + rate, -years));
  return annuity / 365.0;
}

double demand_from_tariff(double intercept, double slope, double tariff, double offset) {
  if (!(slope > 0)) throw std::invalid_argument("demand_from_tariff: slope must be positive");
  double p = tariff + offset;
  if (p > intercept * (1 + 1e-12) + 1e-12)
    throw std::domain_error("demand_from_tariff: tariff exceeds the demand model's support");
  double d = (intercept - p) / slope;
  return std::clamp(d, 0.0, intercept / slope);
}

int ValidatedInstance::state_of_generator(int i) const {
  return inst_.network.nodes[static_cast<std::size_t>(generator(i).node)].state;
}

double ValidatedInstance::inflexible_demand(int node, int day, int t) const {
  return inst_.demand.inflexible[static_cast<std::size_t>(node)][static_cast<std::size_t>(day)]
                                [static_cast<std::size_t>(t)];
}

double ValidatedInstance::utility_intercept(int node, int day, int t) const {
  return inst_.demand.utility_intercept[static_cast<std::size_t>(node)][static_cast<std::size_t>(day)]
                                       [static_cast<std::size_t>(t)];
}

double ValidatedInstance::response_offset(int node, int t) const {
  const auto& r = inst_.demand.response_offset;
  if (r.empty()) return 0.0;
  return r[static_cast<std::size_t>(node)][static_cast<std::size_t>(t)];
}

double ValidatedInstance::capacity_incentive_daily(double tau_c_per_kw) const {
  return prorate_capital(tau_c_per_kw * 1000.0, inst_.policy.recovery_years, inst_.policy.discount_rate);
}

double ValidatedInstance::capacity_incentive_per_kw(double tau_c_daily) const {
  // prorate_capital is linear in its first argument
  double unit = prorate_capital(1000.0, inst_.policy.recovery_years, inst_.policy.discount_rate);
  return tau_c_daily / unit;
}

double ValidatedInstance::tariff_ceiling(int node) const {
  double ceiling = kInf;
  for (int e = 0; e < num_days(); ++e)
    for (int t = 0; t < num_periods(); ++t)
      ceiling = std::min(ceiling, utility_intercept(node, e, t) - response_offset(node, t));
  return std::max(ceiling, 0.0);
}

ValidatedInstance validate_instance(Instance raw) {
  std::vector<ValidationIssue> issues;
  const auto& net = raw.network;
  const int S = static_cast<int>(net.states.size());
  const int Nn = static_cast<int>(net.nodes.size());
  const int E = static_cast<int>(raw.days.weights.size());
  const int T = raw.days.hours;

  if (S == 0) issues.push_back({"/network/states", "no states defined"});
  if (Nn == 0) issues.push_back({"/network/nodes", "no nodes defined"});
  if (E == 0) issues.push_back({"/repdays/weights", "no representative days"});
  if (T <= 0) issues.push_back({"/repdays/hours", "hour count must be positive"});

  {
    std::set<std::string> ids;
    for (std::size_t n = 0; n < net.nodes.size(); ++n) {
      const auto& node = net.nodes[n];
      if (!ids.insert(node.id).second) issues.push_back({at("/network/nodes", n), "duplicate node id " + node.id});
      if (node.state < 0 || node.state >= S)
        issues.push_back({at("/network/nodes", n), "node " + node.id + " references an unknown state"});
      if (!(node.interface_max >= 0)) issues.push_back({at("/network/nodes", n), "interface limit must be >= 0"});
    }
  }
  {
    std::set<std::string> ids;
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      const auto& line = net.lines[l];
      std::string p = at("/network/lines", l);
      if (!ids.insert(line.id).second) issues.push_back({p, "duplicate line id " + line.id});
      if (line.from < 0 || line.from >= Nn || line.to < 0 || line.to >= Nn)
        issues.push_back({p, "line " + line.id + " references a missing node"});
      else if (line.from == line.to)
        issues.push_back({p, "line " + line.id + " connects a node to itself"});
      if (!(line.reactance > 0)) issues.push_back({p, "line " + line.id + " reactance must be > 0"});
      if (!(line.flow_max > 0)) issues.push_back({p, "line " + line.id + " flow limit must be > 0"});
    }
  }

  double wsum = 0.0;
  for (std::size_t e = 0; e < raw.days.weights.size(); ++e) {
    double w = raw.days.weights[e];
    if (!(w > 0)) issues.push_back({at("/repdays/weights", e), "weight must be > 0"});
    wsum += w;
  }
  if (E > 0 && std::abs(wsum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "rep-day weights sum != 1 (sum = " << wsum << ")";
    issues.push_back({"/repdays/weights", os.str()});
  }

  const auto& pol = raw.policy;
  if (pol.strategic_state < 0 || pol.strategic_state >= std::max(S, 1))
    issues.push_back({"/policy/strategic_state", "unknown strategic state"});
  if (!(pol.rps_fraction >= 0 && pol.rps_fraction <= 1)) issues.push_back({"/policy/rps", "must lie in [0, 1]"});
  if (!(pol.budget >= 0)) issues.push_back({"/policy/budget", "must be >= 0"});
  if (!(pol.eta > 0 && pol.eta <= 0.5)) issues.push_back({"/policy/eta", "must lie in (0, 0.5]"});
  if (!(pol.ccg_tolerance > 0)) issues.push_back({"/policy/ccg_tolerance", "must be > 0"});
  if (pol.recovery_years < 1) issues.push_back({"/policy/recovery_years", "must be >= 1"});
  if (!(pol.discount_rate >= 0)) issues.push_back({"/policy/discount_rate", "must be >= 0"});
  if (T > 0 && static_cast<int>(pol.on_peak.size()) != T)
    issues.push_back({"/policy/on_peak", "expected one flag per period"});

  const auto& dem = raw.demand;
  if (!(dem.utility_slope > 0)) issues.push_back({"/demand/slope", "N must be > 0"});
  if (static_cast<int>(dem.inflexible.size()) != Nn) issues.push_back({"/demand/inflexible", "expected one series per node"});
  if (static_cast<int>(dem.utility_intercept.size()) != Nn)
    issues.push_back({"/demand/intercept", "expected one series per node"});
  if (issues.empty()) {
    for (int n = 0; n < Nn; ++n) {
      check_day_period(dem.inflexible[static_cast<std::size_t>(n)], E, T, 0.0, kInf, at("/demand/inflexible", n), issues);
      check_day_period(dem.utility_intercept[static_cast<std::size_t>(n)], E, T, 1e-300, kInf,
                       at("/demand/intercept", n), issues);
    }
    if (!dem.response_offset.empty()) {
      if (static_cast<int>(dem.response_offset.size()) != Nn) {
        issues.push_back({"/demand/response_offset", "expected one row per node"});
      } else {
        for (int n = 0; n < Nn; ++n) {
          const auto& row = dem.response_offset[static_cast<std::size_t>(n)];
          if (static_cast<int>(row.size()) != T) issues.push_back({at("/demand/response_offset", n), "expected one value per period"});
          for (double v : row)
            if (!(v >= 0)) issues.push_back({at("/demand/response_offset", n), "offset must be >= 0"});
        }
      }
    }
  }

  {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < raw.generators.size(); ++i) {
      const auto& g = raw.generators[i];
      std::string p = at("/generators", i);
      if (!ids.insert(g.id).second) issues.push_back({p, "duplicate generator id " + g.id});
      if (g.node < 0 || g.node >= Nn) issues.push_back({p, "generator " + g.id + " references a missing node"});
      if (!(g.cost >= 0)) issues.push_back({p, "C_g must be >= 0"});
      if (!(g.capital_cost >= 0)) issues.push_back({p, "C_inv must be >= 0"});
      if (g.status == GenStatus::Existing) {
        if (!(g.g_min >= 0) || !(g.g_min <= g.g_max)) issues.push_back({p, "requires 0 <= G_min <= G_max"});
      } else {
        if (!(g.build_max >= 0)) issues.push_back({p, "build cap must be >= 0"});
      }
      if (!(g.min_output_factor >= 0 && g.min_output_factor <= 1)) issues.push_back({p, "Gamma must lie in [0, 1]"});
      if (g.is_renewable()) {
        if (std::isfinite(g.ramp_min) || std::isfinite(g.ramp_max))
          issues.push_back({p, "renewable generators carry no ramp limits"});
        if (E > 0 && T > 0) {
          check_day_period(g.forecast, E, T, 0.0, 1.0, p + "/forecast", issues);
          check_day_period(g.error_mean, E, T, -kInf, kInf, p + "/error_mean", issues);
          check_day_period(g.error_sd, E, T, 0.0, kInf, p + "/error_sd", issues);
        }
      } else {
        if (!g.forecast.empty() || !g.error_mean.empty() || !g.error_sd.empty())
          issues.push_back({p, "controllable generators carry no forecast-error fields"});
        if (!(g.ramp_min <= 0) || !(g.ramp_max >= 0)) issues.push_back({p, "ramp limits must satisfy H_min <= 0 <= H_max"});
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  ValidatedInstance vi(std::move(raw));
  const Instance& in = vi.inst_;
  const int G = static_cast<int>(in.generators.size());
  const int s = in.policy.strategic_state;

  vi.nodes_in_state_.assign(static_cast<std::size_t>(S), {});
  vi.strategic_slot_.assign(static_cast<std::size_t>(Nn), -1);
  vi.gens_at_node_.assign(static_cast<std::size_t>(Nn), {});
  for (int n = 0; n < Nn; ++n) {
    int st = in.network.nodes[static_cast<std::size_t>(n)].state;
    vi.nodes_in_state_[static_cast<std::size_t>(st)].push_back(n);
    if (st == s) {
      vi.strategic_slot_[static_cast<std::size_t>(n)] = static_cast<int>(vi.strategic_nodes_.size());
      vi.strategic_nodes_.push_back(n);
    }
  }
  vi.is_utility_.assign(static_cast<std::size_t>(G), 0);
  vi.daily_capital_.assign(static_cast<std::size_t>(G), 0.0);
  for (int i = 0; i < G; ++i) {
    const auto& g = in.generators[static_cast<std::size_t>(i)];
    vi.gens_at_node_[static_cast<std::size_t>(g.node)].push_back(i);
    vi.max_cost_ = std::max(vi.max_cost_, g.cost);
    if (g.is_candidate()) {
      vi.candidates_.push_back(i);
      if (g.is_renewable()) vi.candidate_renewables_.push_back(i);
      vi.daily_capital_[static_cast<std::size_t>(i)] =
          prorate_capital(g.capital_cost, in.policy.recovery_years, in.policy.discount_rate);
    }
    if (vi.state_of_generator(i) == s) {
      vi.is_utility_[static_cast<std::size_t>(i)] = 1;
      vi.utility_gens_.push_back(i);
      (g.is_renewable() ? vi.utility_renewables_ : vi.utility_controllables_).push_back(i);
    }
  }

  if (vi.strategic_nodes_.empty()) issues.push_back({"/policy/strategic_state", "strategic state has no nodes"});
  for (int i : vi.candidates_)
    if (!vi.is_utility_[static_cast<std::size_t>(i)])
      issues.push_back({at("/generators", static_cast<std::size_t>(i)),
                        "candidate generators must belong to the strategic state"});
  if (!vi.utility_renewables_.empty() && vi.utility_controllables_.empty())
    issues.push_back({"/generators", "strategic state has renewables but no controllable balancing generator"});

  // participation factors: default 1/card(controllables in state)
  vi.alpha_.assign(static_cast<std::size_t>(G), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  if (in.participation.empty()) {
    double share = vi.utility_controllables_.empty() ? 0.0 : 1.0 / static_cast<double>(vi.utility_controllables_.size());
    for (int i : vi.utility_controllables_) vi.alpha_[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(T), share);
  } else if (static_cast<int>(in.participation.size()) != G) {
    issues.push_back({"/participation", "expected one row per generator"});
  } else {
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (int i = 0; i < G; ++i) {
        const auto& row = in.participation[static_cast<std::size_t>(i)];
        double a = static_cast<int>(row.size()) == T ? row[static_cast<std::size_t>(t)] : NAN;
        if (!(a >= 0)) {
          issues.push_back({at("/participation", static_cast<std::size_t>(i)), "factor must be >= 0"});
          continue;
        }
        if (a > 0 && (!vi.is_utility_[static_cast<std::size_t>(i)] || in.generators[static_cast<std::size_t>(i)].is_renewable()))
          issues.push_back({at("/participation", static_cast<std::size_t>(i)), "only strategic controllables participate"});
        vi.alpha_[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = a;
        sum += a;
      }
      if (!vi.utility_controllables_.empty() && std::abs(sum - 1.0) > 1e-9)
        issues.push_back({"/participation", "factors must sum to 1 in period " + std::to_string(t)});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return vi;
}

std::vector<DayPeriod> flexible_demand(const ValidatedInstance& inst, const RegulatorDecision& reg) {
  const auto& sn = inst.strategic_nodes();
  std::vector<DayPeriod> d(sn.size(), DayPeriod(static_cast<std::size_t>(inst.num_days()),
                                                std::vector<double>(static_cast<std::size_t>(inst.num_periods()))));
  for (std::size_t k = 0; k < sn.size(); ++k)
    for (int e = 0; e < inst.num_days(); ++e)
      for (int t = 0; t < inst.num_periods(); ++t)
        d[k][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)] =
            demand_from_tariff(inst.utility_intercept(sn[k], e, t), inst.utility_slope(),
                               reg.tariff(inst, static_cast<int>(k), t), inst.response_offset(sn[k], t));
  return d;
}

double market_demand(const ValidatedInstance& inst, const std::vector<DayPeriod>& flexible, int node, int day,
                     int t) {
  int slot = inst.strategic_slot(node);
  if (slot < 0) return inst.inflexible_demand(node, day, t);
  return flexible[static_cast<std::size_t>(slot)][static_cast<std::size_t>(day)][static_cast<std::size_t>(t)];
}

double average_tariff(const ValidatedInstance& inst, const RegulatorDecision& reg) {
  const auto& sn = inst.strategic_nodes();
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < sn.size(); ++k) {
    double mean = 0.0, weight = 0.0;
    for (int t = 0; t < inst.num_periods(); ++t) mean += reg.tariff(inst, static_cast<int>(k), t);
    mean /= inst.num_periods();
    for (int e = 0; e < inst.num_days(); ++e)
      for (int t = 0; t < inst.num_periods(); ++t) weight += inst.day_weight(e) * inst.inflexible_demand(sn[k], e, t);
    num += weight * mean;
    den += weight;
  }
  if (den <= 0) {
    // no consumption anywhere: fall back to the plain mean over nodes
    double m = 0.0;
    for (std::size_t k = 0; k < sn.size(); ++k)
      for (int t = 0; t < inst.num_periods(); ++t) m += reg.tariff(inst, static_cast<int>(k), t);
    return sn.empty() ? 0.0 : m / static_cast<double>(sn.size() * static_cast<std::size_t>(inst.num_periods()));
  }
  return num / den;
}

double state_renewable_energy(const ValidatedInstance& inst, const MarketOutcome& market, int day) {
  double sum = 0.0;
  for (int i : inst.utility_renewables())
    for (int t = 0; t < inst.num_periods(); ++t)
      sum += market.dispatch[static_cast<std::size_t>(i)][static_cast<std::size_t>(day)][static_cast<std::size_t>(t)];
  return sum;
}

double state_inflexible_energy(const ValidatedInstance& inst, int day) {
  double sum = 0.0;
  for (int n : inst.strategic_nodes())
    for (int t = 0; t < inst.num_periods(); ++t) sum += inst.inflexible_demand(n, day, t);
  return sum;
}

namespace {
double candidate_renewable_capacity(const ValidatedInstance& inst, const UtilityDecision& util) {
  double cap = 0.0;
  for (int i : inst.candidate_renewables()) cap += util.capacity[static_cast<std::size_t>(i)];
  return cap;
}
}  // namespace

double policy_spending(const ValidatedInstance& inst, const RegulatorDecision& reg, const UtilityDecision& util,
                       const MarketOutcome& market, int day) {
  return reg.tau_e * state_renewable_energy(inst, market, day) +
         inst.capacity_incentive_daily(reg.tau_c) * candidate_renewable_capacity(inst, util);
}

double regulator_objective(const ValidatedInstance& inst, const RegulatorDecision& reg, const UtilityDecision& util,
                           const MarketOutcome& market) {
  const auto& sn = inst.strategic_nodes();
  double obj = 0.0;
  for (int e = 0; e < inst.num_days(); ++e) {
    double day = reg.tau_e * state_renewable_energy(inst, market, e);
    for (std::size_t k = 0; k < sn.size(); ++k)
      for (int t = 0; t < inst.num_periods(); ++t)
        day += inst.inflexible_demand(sn[k], e, t) * reg.tariff(inst, static_cast<int>(k), t);
    obj += inst.day_weight(e) * day;
  }
  return obj + inst.capacity_incentive_daily(reg.tau_c) * candidate_renewable_capacity(inst, util);
}

double utility_objective(const ValidatedInstance& inst, const RegulatorDecision& reg, const UtilityDecision& util,
                         const MarketOutcome& market) {
  const auto& sn = inst.strategic_nodes();
  double obj = 0.0;
  for (int e = 0; e < inst.num_days(); ++e) {
    double day = 0.0;
    for (int t = 0; t < inst.num_periods(); ++t) {
      for (std::size_t k = 0; k < sn.size(); ++k) {
        double d = util.demand[k][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
        double lam = market.lmp[static_cast<std::size_t>(sn[k])][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
        day += (reg.tariff(inst, static_cast<int>(k), t) - lam) * d;
      }
      for (int i : inst.utility_generators()) {
        const auto& gen = inst.generator(i);
        double g = market.dispatch[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
        double lam =
            market.lmp[static_cast<std::size_t>(gen.node)][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
        day += (lam - gen.cost) * g;
        if (gen.is_renewable()) day += reg.tau_e * g;
      }
    }
    obj += inst.day_weight(e) * day;
  }
  double tc = inst.capacity_incentive_daily(reg.tau_c);
  for (int i : inst.candidates()) {
    double cap = util.capacity[static_cast<std::size_t>(i)];
    obj -= inst.daily_capital_cost(i) * cap;
    if (inst.generator(i).is_renewable()) obj += tc * cap;
  }
  return obj;
}

}  // namespace rpsopt
