#include "rpsopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "rpsopt/market.hpp"
#include "rpsopt/stochastic.hpp"

namespace rpsopt {

namespace {

constexpr double kFeasTol = 1e-6;

std::size_t z(int i) { return static_cast<std::size_t>(i); }

std::vector<double> linspace(double lo, double hi, int n) {
  if (n <= 1 || hi - lo <= 0.0) return {lo};
  std::vector<double> v(z(n));
  for (int k = 0; k < n; ++k) v[z(k)] = lo + (hi - lo) * k / (n - 1);
  v.back() = hi;
  return v;
}

// Offers of the utility's controllables for one day: [controllable][t].
using DayPlan = std::vector<std::vector<double>>;

struct DayOption {
  double base = 0.0;  // day profit without incentives
  double ren = 0.0;   // utility renewable energy, MWh
  int plan = 0;
};

// Everything the enumeration needs for one tariff vector.
struct TariffTable {
  std::vector<std::vector<double>> caps;                   // [capacity point][candidate]
  std::vector<std::vector<std::vector<DayOption>>> opts;   // [capacity point][day]
  std::vector<std::vector<std::vector<DayPlan>>> plans;    // [capacity point][day]
  std::vector<DayPeriod> demand;                           // flexible demand [slot][e][t]
  long solves = 0;
};

std::vector<std::vector<double>> capacity_points(const ValidatedInstance& inst, const GridSpec& grid) {
  const auto& cand = inst.candidates();
  std::vector<std::vector<double>> axes;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (k < grid.capacity_values.size() && !grid.capacity_values[k].empty())
      axes.push_back(grid.capacity_values[k]);
    else
      axes.push_back(linspace(0.0, candidate_capacity_cap(inst, cand[k]), grid.capacity_points));
  }
  std::vector<std::vector<double>> out{{}};
  for (const auto& ax : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : out)
      for (double v : ax) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

class Enumerator {
 public:
  Enumerator(const ValidatedInstance& inst, const GridSpec& grid)
      : inst_(inst), grid_(grid), chance_(deterministic_generation_constraints(inst, inst.policy().eta)) {}

  TariffTable build(const RegulatorDecision& tariffs) const {
    TariffTable tab;
    tab.demand = flexible_demand(inst_, tariffs);
    tab.caps = capacity_points(inst_, grid_);
    tab.opts.resize(tab.caps.size());
    tab.plans.resize(tab.caps.size());
    for (std::size_t c = 0; c < tab.caps.size(); ++c) {
      tab.opts[c].resize(z(inst_.num_days()));
      tab.plans[c].resize(z(inst_.num_days()));
      for (int e = 0; e < inst_.num_days(); ++e) enumerate_day(tariffs, tab, c, e);
    }
    return tab;
  }

  std::vector<double> full_capacity(const std::vector<double>& point) const {
    std::vector<double> cap(z(inst_.num_generators()), 0.0);
    for (std::size_t k = 0; k < point.size(); ++k) cap[z(inst_.candidates()[k])] = point[k];
    return cap;
  }

  std::vector<std::vector<double>> day_offers_for(const std::vector<double>& cap, const DayPlan& plan, int e) const {
    const int T = inst_.num_periods();
    std::vector<std::vector<double>> off(z(inst_.num_generators()), std::vector<double>(z(T), 0.0));
    const auto& ctl = inst_.utility_controllables();
    for (int i = 0; i < inst_.num_generators(); ++i) {
      const auto& g = inst_.generator(i);
      for (int t = 0; t < T; ++t) {
        if (!inst_.is_utility_generator(i)) off[z(i)][z(t)] = nonstrategic_offer(inst_, i, e, t);
        else if (g.is_renewable())
          off[z(i)][z(t)] = g.forecast[z(e)][z(t)] * (g.is_candidate() ? cap[z(i)] : g.g_max);
      }
    }
    for (std::size_t k = 0; k < ctl.size(); ++k)
      for (int t = 0; t < T; ++t) off[z(ctl[k])][z(t)] = plan[k][z(t)];
    return off;
  }

 private:
  // Feasible offer interval of a controllable in (e, t) under the chance rows.
  std::pair<double, double> offer_interval(int i, int e, int t, const std::vector<double>& cap) const {
    const auto& g = inst_.generator(i);
    double lo = 0.0, hi = g.is_candidate() ? cap[z(i)] : g.g_max;
    for (const auto& cc : chance_) {
      if (cc.gen != i || cc.day != e || cc.period != t || cc.offer_coef == 0.0) continue;
      double bound = -cc.residual(0.0, cap) / cc.offer_coef;
      if (cc.offer_coef > 0) hi = std::min(hi, bound);
      else lo = std::max(lo, bound);
    }
    return {lo, hi};
  }

  void enumerate_day(const RegulatorDecision& tariffs, TariffTable& tab, std::size_t c, int e) const {
    const int T = inst_.num_periods();
    const auto& ctl = inst_.utility_controllables();
    auto cap = full_capacity(tab.caps[c]);

    // ladder[k][t]
    std::vector<std::vector<std::vector<double>>> ladder(ctl.size(), std::vector<std::vector<double>>(z(T)));
    for (std::size_t k = 0; k < ctl.size(); ++k)
      for (int t = 0; t < T; ++t) {
        auto [lo, hi] = offer_interval(ctl[k], e, t, cap);
        if (lo > hi + 1e-9) return;
        ladder[k][z(t)] = linspace(lo, std::max(lo, hi), grid_.offer_levels);
      }

    // Ramp-feasible sequences per controllable.
    std::vector<std::vector<std::vector<double>>> seqs(ctl.size());
    for (std::size_t k = 0; k < ctl.size(); ++k) {
      const auto& g = inst_.generator(ctl[k]);
      std::vector<double> cur;
      std::function<void(int)> dfs = [&](int t) {
        if (t == T) {
          seqs[k].push_back(cur);
          return;
        }
        for (double v : ladder[k][z(t)]) {
          if (t > 0) {
            double step = v - cur.back();
            if (step > g.ramp_max + 1e-9 || step < g.ramp_min - 1e-9) continue;
          }
          cur.push_back(v);
          dfs(t + 1);
          cur.pop_back();
        }
      };
      dfs(0);
      if (seqs[k].empty()) return;
    }

    const auto& sn = inst_.strategic_nodes();
    std::vector<std::size_t> pick(ctl.size(), 0);
    while (true) {
      DayPlan plan(ctl.size());
      for (std::size_t k = 0; k < ctl.size(); ++k) plan[k] = seqs[k][pick[k]];
      evaluate(tariffs, tab, c, e, cap, plan, sn);
      std::size_t k = 0;
      for (; k < ctl.size(); ++k) {
        if (++pick[k] < seqs[k].size()) break;
        pick[k] = 0;
      }
      if (k == ctl.size()) break;
    }
  }

  void evaluate(const RegulatorDecision& tariffs, TariffTable& tab, std::size_t c, int e, const std::vector<double>& cap,
                const DayPlan& plan, const std::vector<int>& sn) const {
    const int T = inst_.num_periods();
    auto off = day_offers_for(cap, plan, e);
    // Interface limits on the utility's own balance.
    for (std::size_t k = 0; k < sn.size(); ++k) {
      double P = inst_.network().nodes[z(sn[k])].interface_max;
      for (int t = 0; t < T; ++t) {
        double supply = 0.0;
        for (int i : inst_.generators_at(sn[k]))
          if (inst_.is_utility_generator(i)) supply += off[z(i)][z(t)];
        double p = tab.demand[k][z(e)][z(t)] - supply;
        if (std::abs(p) > P + 1e-9) return;
      }
    }
    MarketInput in;
    in.day = e;
    in.offers = off;
    for (std::size_t k = 0; k < sn.size(); ++k) in.demand.push_back(tab.demand[k][z(e)]);
    DayMarket m = solve_day_market(inst_, in);
    ++tab.solves;
    if (m.status != LpStatus::Optimal) return;

    DayOption o;
    o.plan = static_cast<int>(tab.plans[c][z(e)].size());
    for (int t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < sn.size(); ++k)
        o.base += (tariffs.tariff(inst_, static_cast<int>(k), t) - m.lambda[z(sn[k])][z(t)]) * tab.demand[k][z(e)][z(t)];
      for (int i : inst_.utility_generators()) {
        const auto& g = inst_.generator(i);
        double gi = m.g[z(i)][z(t)];
        o.base += (m.lambda[z(g.node)][z(t)] - g.cost) * gi;
        if (g.is_renewable()) o.ren += gi;
      }
    }
    tab.opts[c][z(e)].push_back(o);
    tab.plans[c][z(e)].push_back(plan);
  }

  const ValidatedInstance& inst_;
  const GridSpec& grid_;
  std::vector<ChanceConstraint> chance_;
};

// Outcome of the utility's choice at one regulator point.
struct Choice {
  bool found = false;
  std::size_t cap = 0;
  std::vector<int> opt;  // per day, index into opts
  double profit = 0.0;
  double regulator = 0.0;
  int violations = 0;
  bool rps_ok = true, budget_ok = true;
};

double inflexible_payment(const ValidatedInstance& inst, const RegulatorDecision& reg) {
  double s = 0.0;
  const auto& sn = inst.strategic_nodes();
  for (int e = 0; e < inst.num_days(); ++e)
    for (std::size_t k = 0; k < sn.size(); ++k)
      for (int t = 0; t < inst.num_periods(); ++t)
        s += inst.day_weight(e) * inst.inflexible_demand(sn[k], e, t) * reg.tariff(inst, static_cast<int>(k), t);
  return s;
}

bool better_key(double a_val, int a_viol, double a_reg, double b_val, int b_viol, double b_reg, double tol) {
  double scale = tol * std::max(1.0, std::max(std::abs(a_val), std::abs(b_val)));
  if (a_val > b_val + scale) return true;
  if (a_val < b_val - scale) return false;
  if (a_viol != b_viol) return a_viol < b_viol;
  return a_reg < b_reg - 1e-12;
}

// Utility best response on the table, optimistic toward the regulator on ties.
Choice choose(const ValidatedInstance& inst, const TariffTable& tab, const RegulatorDecision& reg, double tie_tol) {
  const double kappa = inst.policy().rps_fraction;
  const double budget = inst.policy().budget;
  const double tc = inst.capacity_incentive_daily(reg.tau_c);
  const double payment = inflexible_payment(inst, reg);
  Choice best;
  for (std::size_t c = 0; c < tab.caps.size(); ++c) {
    double cap_ren = 0.0, capex = 0.0;
    for (std::size_t k = 0; k < inst.candidates().size(); ++k) {
      int i = inst.candidates()[k];
      capex += inst.daily_capital_cost(i) * tab.caps[c][k];
      if (inst.generator(i).is_renewable()) cap_ren += tab.caps[c][k];
    }
    Choice ch;
    ch.found = true;
    ch.cap = c;
    ch.profit = tc * cap_ren - capex;
    ch.regulator = payment + tc * cap_ren;
    for (int e = 0; e < inst.num_days(); ++e) {
      const auto& opts = tab.opts[c][z(e)];
      if (opts.empty()) {
        ch.found = false;
        break;
      }
      double need = kappa * state_inflexible_energy(inst, e);
      int bi = -1;
      double bv = 0.0, br = 0.0;
      int bviol = 0;
      for (std::size_t o = 0; o < opts.size(); ++o) {
        double v = opts[o].base + reg.tau_e * opts[o].ren;
        double spend = reg.tau_e * opts[o].ren + tc * cap_ren;
        int viol = (opts[o].ren < need - kFeasTol) + (spend > budget + kFeasTol);
        double r = reg.tau_e * opts[o].ren;
        if (bi < 0 || better_key(v, viol, r, bv, bviol, br, tie_tol)) {
          bi = static_cast<int>(o);
          bv = v;
          bviol = viol;
          br = r;
        }
      }
      const auto& o = opts[z(bi)];
      double w = inst.day_weight(e);
      ch.opt.push_back(bi);
      ch.profit += w * bv;
      ch.regulator += w * reg.tau_e * o.ren;
      if (o.ren < need - kFeasTol) ch.rps_ok = false;
      if (reg.tau_e * o.ren + tc * cap_ren > budget + kFeasTol) ch.budget_ok = false;
    }
    if (!ch.found) continue;
    ch.violations = !ch.rps_ok + !ch.budget_ok + (ch.profit < -kFeasTol);
    if (!best.found ||
        better_key(ch.profit, ch.violations, ch.regulator, best.profit, best.violations, best.regulator, tie_tol))
      best = ch;
  }
  return best;
}

UtilityResponse materialize(const ValidatedInstance& inst, const Enumerator& en, const TariffTable& tab,
                            const RegulatorDecision& reg, const Choice& ch) {
  UtilityResponse r;
  auto cap = en.full_capacity(tab.caps[ch.cap]);
  r.util.capacity = cap;
  const int E = inst.num_days(), T = inst.num_periods(), G = inst.num_generators();
  r.util.offers.assign(z(G), DayPeriod(z(E), std::vector<double>(z(T), 0.0)));
  const auto& sn = inst.strategic_nodes();
  r.util.interface_flow.assign(sn.size(), DayPeriod(z(E), std::vector<double>(z(T), 0.0)));
  r.util.demand = tab.demand;
  for (int e = 0; e < E; ++e) {
    const auto& plan = tab.plans[ch.cap][z(e)][z(tab.opts[ch.cap][z(e)][z(ch.opt[z(e)])].plan)];
    auto off = en.day_offers_for(cap, plan, e);
    for (int i = 0; i < G; ++i)
      if (inst.is_utility_generator(i)) r.util.offers[z(i)][z(e)] = off[z(i)];
    for (std::size_t k = 0; k < sn.size(); ++k)
      for (int t = 0; t < T; ++t) {
        double supply = 0.0;
        for (int i : inst.generators_at(sn[k]))
          if (inst.is_utility_generator(i)) supply += off[z(i)][z(t)];
        r.util.interface_flow[k][z(e)][z(t)] = tab.demand[k][z(e)][z(t)] - supply;
      }
  }
  r.market = solve_market(inst, r.util);
  r.objective = utility_objective(inst, reg, r.util, r.market);
  return r;
}

struct Axis {
  double lo = 0.0, hi = 0.0;
  std::vector<double> values;
  bool fixed = false;
};

template <typename F>
void parallel_for(std::size_t n, F&& f) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

UtilityResponse best_utility_response(const ValidatedInstance& inst, const RegulatorDecision& reg, const GridSpec& grid) {
  Enumerator en(inst, grid);
  TariffTable tab = en.build(reg);
  Choice ch = choose(inst, tab, reg, grid.tie_tol);
  if (!ch.found) throw std::runtime_error("no feasible utility plan on the grid");
  UtilityResponse r = materialize(inst, en, tab, reg, ch);
  for (const auto& c : tab.opts)
    for (const auto& d : c) r.plans_evaluated += static_cast<long>(d.size());
  return r;
}

OracleResult grid_search_trilevel(const ValidatedInstance& inst, const GridSpec& grid) {
  Enumerator en(inst, grid);
  const auto& sn = inst.strategic_nodes();
  const std::size_t S = sn.size();
  CcgConfig cfg;
  cfg.tau_e_max = grid.tau_e_max;
  cfg.tau_c_max = grid.tau_c_max;

  // Axes: pi_on[S], pi_off[S], tau_e, tau_c.
  std::vector<Axis> axes(2 * S + 2);
  for (std::size_t k = 0; k < S; ++k) {
    double lo = 0.0;
    for (int t = 0; t < inst.num_periods(); ++t) lo = std::max(lo, -inst.response_offset(sn[k], t));
    double hi = inst.tariff_ceiling(sn[k]);
    axes[k] = {lo, hi, grid.pi_on_values, !grid.pi_on_values.empty()};
    axes[S + k] = {lo, hi, grid.pi_off_values, !grid.pi_off_values.empty()};
  }
  Axis& ae = axes[2 * S];
  Axis& ac = axes[2 * S + 1];
  ae = {0.0, energy_incentive_cap(inst, cfg), grid.tau_e_values, !grid.tau_e_values.empty()};
  ac = {0.0, capacity_incentive_cap(inst, cfg), grid.tau_c_values, !grid.tau_c_values.empty()};
  if (grid.pin_tau_e) ae = {*grid.pin_tau_e, *grid.pin_tau_e, {*grid.pin_tau_e}, true};
  if (grid.pin_tau_c) ac = {*grid.pin_tau_c, *grid.pin_tau_c, {*grid.pin_tau_c}, true};
  for (auto& a : axes)
    if (!a.fixed) a.values = linspace(a.lo, a.hi, grid.regulator_points);

  OracleResult best;
  best.grid = grid;
  bool have = false;
  RegulatorDecision best_reg;
  std::vector<double> best_point(axes.size(), 0.0);
  std::vector<double> span(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a)
    span[a] = axes[a].values.size() > 1 ? (axes[a].hi - axes[a].lo) / (static_cast<double>(axes[a].values.size()) - 1) : 0.0;

  for (int level = 0; level <= grid.refine_levels; ++level) {
    if (level > 0) {
      if (!have) break;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        if (axes[a].fixed) continue;
        double lo = std::max(axes[a].lo, best_point[a] - span[a]);
        double hi = std::min(axes[a].hi, best_point[a] + span[a]);
        axes[a].values = linspace(lo, hi, grid.refine_points);
        span[a] = axes[a].values.size() > 1 ? (hi - lo) / (static_cast<double>(axes[a].values.size()) - 1) : 0.0;
      }
    }
    // Enumerate tariff combinations; incentives are evaluated on each table.
    std::vector<std::vector<double>> tariff_pts{{}};
    for (std::size_t a = 0; a < 2 * S; ++a) {
      std::vector<std::vector<double>> next;
      for (const auto& p : tariff_pts)
        for (double v : axes[a].values) {
          auto q = p;
          q.push_back(v);
          next.push_back(std::move(q));
        }
      tariff_pts = std::move(next);
    }

    struct Local {
      bool have = false;
      double obj = 0.0;
      RegulatorDecision reg;
      std::vector<double> point;
      OracleStats stats;
    };
    std::vector<Local> local(tariff_pts.size());
    parallel_for(tariff_pts.size(), [&](std::size_t ti) {
      RegulatorDecision reg;
      reg.pi_on.assign(tariff_pts[ti].begin(), tariff_pts[ti].begin() + static_cast<long>(S));
      reg.pi_off.assign(tariff_pts[ti].begin() + static_cast<long>(S), tariff_pts[ti].end());
      TariffTable tab = en.build(reg);
      Local& L = local[ti];
      L.stats.market_solves = tab.solves;
      for (double te : ae.values)
        for (double tcv : ac.values) {
          reg.tau_e = te;
          reg.tau_c = tcv;
          ++L.stats.regulator_points;
          Choice ch = choose(inst, tab, reg, grid.tie_tol);
          if (!ch.found) {
            ++L.stats.no_response;
            continue;
          }
          bool ok = true;
          if (!ch.rps_ok) ++L.stats.rps_violations, ok = false;
          if (!ch.budget_ok) ++L.stats.budget_violations, ok = false;
          if (ch.profit < -kFeasTol) ++L.stats.adequacy_violations, ok = false;
          if (!ok) continue;
          ++L.stats.feasible;
          if (!L.have || ch.regulator < L.obj - 1e-12) {
            L.have = true;
            L.obj = ch.regulator;
            L.reg = reg;
            L.point = tariff_pts[ti];
            L.point.push_back(te);
            L.point.push_back(tcv);
          }
        }
    });
    for (const auto& L : local) {
      best.stats.regulator_points += L.stats.regulator_points;
      best.stats.feasible += L.stats.feasible;
      best.stats.no_response += L.stats.no_response;
      best.stats.rps_violations += L.stats.rps_violations;
      best.stats.budget_violations += L.stats.budget_violations;
      best.stats.adequacy_violations += L.stats.adequacy_violations;
      best.stats.market_solves += L.stats.market_solves;
      if (L.have && (!have || L.obj < best.regulator_objective - 1e-12)) {
        have = true;
        best.regulator_objective = L.obj;
        best_reg = L.reg;
        best_point = L.point;
      }
    }
  }
  if (!have)
    throw OracleInfeasible("every regulator grid point is infeasible (no response " + std::to_string(best.stats.no_response) +
                               ", RPS " + std::to_string(best.stats.rps_violations) + ", budget " +
                               std::to_string(best.stats.budget_violations) + ", revenue adequacy " +
                               std::to_string(best.stats.adequacy_violations) + ")",
                           best.stats);
  best.reg = best_reg;
  TariffTable tab = en.build(best_reg);
  Choice ch = choose(inst, tab, best_reg, grid.tie_tol);
  best.response = materialize(inst, en, tab, best_reg, ch);
  best.regulator_objective = regulator_objective(inst, best_reg, best.response.util, best.response.market);
  return best;
}

}  // namespace rpsopt
