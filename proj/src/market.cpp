#include "rpsopt/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rpsopt {

namespace {

std::vector<int> day_periods(const ValidatedInstance& inst, const MarketInput& in) {
  if (!in.periods.empty()) return in.periods;
  std::vector<int> p(static_cast<std::size_t>(inst.num_periods()));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

std::string tag(const std::string& base, const std::string& id, int t) {
  return base + "[" + id + "," + std::to_string(t) + "]";
}

double demand_at(const ValidatedInstance& inst, const MarketInput& in, int node, int t) {
  int slot = inst.strategic_slot(node);
  if (slot < 0) return inst.inflexible_demand(node, in.day, t);
  return in.demand[static_cast<std::size_t>(slot)][static_cast<std::size_t>(t)];
}

using Grid = std::vector<std::vector<int>>;
Grid grid(int rows, std::size_t cols) { return Grid(static_cast<std::size_t>(rows), std::vector<int>(cols, -1)); }

}  // namespace

std::vector<int> reference_nodes(const ValidatedInstance& inst) {
  const int N = inst.num_nodes();
  std::vector<int> parent(static_cast<std::size_t>(N));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    return a;
  };
  for (const auto& l : inst.network().lines) {
    int a = find(l.from), b = find(l.to);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<int> refs;
  for (int n = 0; n < N; ++n)
    if (find(n) == n) refs.push_back(n);
  return refs;
}

LlPrimal build_ll_primal(const ValidatedInstance& inst, const MarketInput& in) {
  LlPrimal out;
  out.periods = day_periods(inst, in);
  const auto K = out.periods.size();
  const auto& net = inst.network();
  auto& lp = out.lp;
  lp.sense = Sense::Maximize;
  out.g = grid(inst.num_generators(), K);
  out.f = grid(inst.num_lines(), K);
  out.theta = grid(inst.num_nodes(), K);
  out.flow_row = grid(inst.num_lines(), K);
  out.balance_row = grid(inst.num_nodes(), K);
  std::vector<char> is_ref(static_cast<std::size_t>(inst.num_nodes()), 0);
  for (int r : reference_nodes(inst)) is_ref[static_cast<std::size_t>(r)] = 1;

  for (std::size_t k = 0; k < K; ++k) {
    int t = out.periods[k];
    for (int i = 0; i < inst.num_generators(); ++i) {
      double cap = in.offers[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
      if (cap < 0) throw std::invalid_argument("negative offer for generator " + inst.generator(i).id);
      out.g[static_cast<std::size_t>(i)][k] = lp.add_column(tag("g", inst.generator(i).id, t), 0.0, cap, -inst.generator(i).cost);
    }
    for (int l = 0; l < inst.num_lines(); ++l) {
      const auto& line = net.lines[static_cast<std::size_t>(l)];
      out.f[static_cast<std::size_t>(l)][k] = lp.add_column(tag("f", line.id, t), -line.flow_max, line.flow_max);
    }
    for (int n = 0; n < inst.num_nodes(); ++n) {
      bool ref = is_ref[static_cast<std::size_t>(n)];
      out.theta[static_cast<std::size_t>(n)][k] =
          lp.add_column(tag("theta", net.nodes[static_cast<std::size_t>(n)].id, t), ref ? 0.0 : -kInf, ref ? 0.0 : kInf);
    }
    for (int l = 0; l < inst.num_lines(); ++l) {
      const auto& line = net.lines[static_cast<std::size_t>(l)];
      double b = 1.0 / line.reactance;
      out.flow_row[static_cast<std::size_t>(l)][k] = lp.add_row(
          tag("flow", line.id, t), RowType::Eq, 0.0,
          {out.f[static_cast<std::size_t>(l)][k], out.theta[static_cast<std::size_t>(line.from)][k], out.theta[static_cast<std::size_t>(line.to)][k]},
          {1.0, -b, b});
    }
    for (int n = 0; n < inst.num_nodes(); ++n) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int i : inst.generators_at(n)) {
        idx.push_back(out.g[static_cast<std::size_t>(i)][k]);
        val.push_back(1.0);
      }
      for (int l = 0; l < inst.num_lines(); ++l) {
        const auto& line = net.lines[static_cast<std::size_t>(l)];
        if (line.to == n) {
          idx.push_back(out.f[static_cast<std::size_t>(l)][k]);
          val.push_back(1.0);
        }
        if (line.from == n) {
          idx.push_back(out.f[static_cast<std::size_t>(l)][k]);
          val.push_back(-1.0);
        }
      }
      out.balance_row[static_cast<std::size_t>(n)][k] = lp.add_row(tag("balance", net.nodes[static_cast<std::size_t>(n)].id, t),
                                                                  RowType::Eq, demand_at(inst, in, n, t), idx, val);
    }
  }
  return out;
}

LlDual build_ll_dual(const ValidatedInstance& inst, const MarketInput& in) {
  LlDual out;
  out.periods = day_periods(inst, in);
  const auto K = out.periods.size();
  const auto& net = inst.network();
  auto& lp = out.lp;
  lp.sense = Sense::Minimize;
  out.lambda = grid(inst.num_nodes(), K);
  out.xi = grid(inst.num_lines(), K);
  out.gamma_lo = grid(inst.num_generators(), K);
  out.gamma_up = grid(inst.num_generators(), K);
  out.delta_lo = grid(inst.num_lines(), K);
  out.delta_up = grid(inst.num_lines(), K);

  for (std::size_t k = 0; k < K; ++k) {
    int t = out.periods[k];
    for (int n = 0; n < inst.num_nodes(); ++n)
      out.lambda[static_cast<std::size_t>(n)][k] = lp.add_column(tag("lambda", net.nodes[static_cast<std::size_t>(n)].id, t), -kInf,
                                                                 kInf, -demand_at(inst, in, n, t));
    for (int l = 0; l < inst.num_lines(); ++l) {
      const auto& line = net.lines[static_cast<std::size_t>(l)];
      out.xi[static_cast<std::size_t>(l)][k] = lp.add_column(tag("xi", line.id, t), -kInf, kInf);
      out.delta_lo[static_cast<std::size_t>(l)][k] = lp.add_column(tag("delta_lo", line.id, t), 0.0, kInf, line.flow_max);
      out.delta_up[static_cast<std::size_t>(l)][k] = lp.add_column(tag("delta_up", line.id, t), 0.0, kInf, line.flow_max);
    }
    for (int i = 0; i < inst.num_generators(); ++i) {
      const auto& id = inst.generator(i).id;
      out.gamma_lo[static_cast<std::size_t>(i)][k] = lp.add_column(tag("gamma_lo", id, t), 0.0, kInf);
      out.gamma_up[static_cast<std::size_t>(i)][k] =
          lp.add_column(tag("gamma_up", id, t), 0.0, kInf, in.offers[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]);
    }
    for (int i = 0; i < inst.num_generators(); ++i) {
      const auto& g = inst.generator(i);
      lp.add_row(tag("dual_g", g.id, t), RowType::Eq, -g.cost,
                 {out.gamma_lo[static_cast<std::size_t>(i)][k], out.gamma_up[static_cast<std::size_t>(i)][k], out.lambda[static_cast<std::size_t>(g.node)][k]},
                 {-1.0, 1.0, -1.0});
    }
    for (int l = 0; l < inst.num_lines(); ++l) {
      const auto& line = net.lines[static_cast<std::size_t>(l)];
      lp.add_row(tag("dual_f", line.id, t), RowType::Eq, 0.0,
                 {out.delta_lo[static_cast<std::size_t>(l)][k], out.delta_up[static_cast<std::size_t>(l)][k], out.xi[static_cast<std::size_t>(l)][k],
                  out.lambda[static_cast<std::size_t>(line.to)][k], out.lambda[static_cast<std::size_t>(line.from)][k]},
                 {-1.0, 1.0, 1.0, -1.0, 1.0});
    }
    for (int n = 0; n < inst.num_nodes(); ++n) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int l = 0; l < inst.num_lines(); ++l) {
        const auto& line = net.lines[static_cast<std::size_t>(l)];
        if (line.from == n) {
          idx.push_back(out.xi[static_cast<std::size_t>(l)][k]);
          val.push_back(-1.0 / line.reactance);
        }
        if (line.to == n) {
          idx.push_back(out.xi[static_cast<std::size_t>(l)][k]);
          val.push_back(1.0 / line.reactance);
        }
      }
      lp.add_row(tag("dual_theta", net.nodes[static_cast<std::size_t>(n)].id, t), RowType::Eq, 0.0, idx, val);
    }
  }
  return out;
}

double strong_duality_gap(const LpSolution& primal, const LpSolution& dual) {
  return std::abs(primal.objective - dual.objective);
}

DayMarket solve_day_market(const ValidatedInstance& inst, const MarketInput& in) {
  LlPrimal ll = build_ll_primal(inst, in);
  LpSolution sol = solve_lp(ll.lp);
  DayMarket out;
  out.status = sol.status;
  if (!sol.optimal()) return out;
  const auto K = ll.periods.size();
  auto take = [&](const Grid& cols, std::vector<std::vector<double>>& dst, auto&& fn) {
    dst.assign(cols.size(), std::vector<double>(K, 0.0));
    for (std::size_t a = 0; a < cols.size(); ++a)
      for (std::size_t k = 0; k < K; ++k) dst[a][k] = fn(cols[a][k]);
  };
  take(ll.g, out.g, [&](int j) { return sol.x[static_cast<std::size_t>(j)]; });
  take(ll.f, out.f, [&](int j) { return sol.x[static_cast<std::size_t>(j)]; });
  take(ll.theta, out.theta, [&](int j) { return sol.x[static_cast<std::size_t>(j)]; });
  take(ll.balance_row, out.lambda, [&](int r) { return -sol.duals[static_cast<std::size_t>(r)]; });
  take(ll.flow_row, out.xi, [&](int r) { return sol.duals[static_cast<std::size_t>(r)]; });
  take(ll.g, out.gamma_up, [&](int j) { return std::max(sol.reduced_costs[static_cast<std::size_t>(j)], 0.0); });
  take(ll.g, out.gamma_lo, [&](int j) { return std::max(-sol.reduced_costs[static_cast<std::size_t>(j)], 0.0); });
  take(ll.f, out.delta_up, [&](int j) { return std::max(sol.reduced_costs[static_cast<std::size_t>(j)], 0.0); });
  take(ll.f, out.delta_lo, [&](int j) { return std::max(-sol.reduced_costs[static_cast<std::size_t>(j)], 0.0); });
  out.primal_objective = sol.objective;

  double dobj = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    int t = ll.periods[k];
    for (int i = 0; i < inst.num_generators(); ++i)
      dobj += in.offers[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] * out.gamma_up[static_cast<std::size_t>(i)][k];
    for (int n = 0; n < inst.num_nodes(); ++n) dobj -= demand_at(inst, in, n, t) * out.lambda[static_cast<std::size_t>(n)][k];
    for (int l = 0; l < inst.num_lines(); ++l)
      dobj += inst.network().lines[static_cast<std::size_t>(l)].flow_max *
              (out.delta_up[static_cast<std::size_t>(l)][k] + out.delta_lo[static_cast<std::size_t>(l)][k]);
  }
  out.dual_objective = dobj;
  return out;
}

double nonstrategic_offer(const ValidatedInstance& inst, int gen, int day, int t) {
  const auto& g = inst.generator(gen);
  if (g.is_candidate()) return 0.0;
  if (g.is_renewable()) return g.forecast[static_cast<std::size_t>(day)][static_cast<std::size_t>(t)] * g.g_max;
  return g.g_max;
}

std::vector<std::vector<double>> day_offers(const ValidatedInstance& inst, const UtilityDecision& util, int day) {
  std::vector<std::vector<double>> off(static_cast<std::size_t>(inst.num_generators()),
                                       std::vector<double>(static_cast<std::size_t>(inst.num_periods()), 0.0));
  for (int i = 0; i < inst.num_generators(); ++i)
    for (int t = 0; t < inst.num_periods(); ++t)
      off[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
          inst.is_utility_generator(i) ? util.offers[static_cast<std::size_t>(i)][static_cast<std::size_t>(day)][static_cast<std::size_t>(t)]
                                       : nonstrategic_offer(inst, i, day, t);
  return off;
}

MarketOutcome solve_market(const ValidatedInstance& inst, const UtilityDecision& util) {
  const auto E = static_cast<std::size_t>(inst.num_days());
  const auto T = static_cast<std::size_t>(inst.num_periods());
  auto blank = [&](int count) {
    return std::vector<DayPeriod>(static_cast<std::size_t>(count), DayPeriod(E, std::vector<double>(T, 0.0)));
  };
  MarketOutcome m;
  m.dispatch = blank(inst.num_generators());
  m.flow = blank(inst.num_lines());
  m.angle = blank(inst.num_nodes());
  m.lmp = blank(inst.num_nodes());
  m.flow_dual = blank(inst.num_lines());
  m.gen_lower_dual = blank(inst.num_generators());
  m.gen_upper_dual = blank(inst.num_generators());
  m.flow_lower_dual = blank(inst.num_lines());
  m.flow_upper_dual = blank(inst.num_lines());
  m.primal_objective.assign(E, 0.0);
  m.dual_objective.assign(E, 0.0);
  for (int e = 0; e < inst.num_days(); ++e) {
    MarketInput in;
    in.day = e;
    in.offers = day_offers(inst, util, e);
    in.demand.resize(inst.strategic_nodes().size());
    for (std::size_t s = 0; s < in.demand.size(); ++s) in.demand[s] = util.demand[s][static_cast<std::size_t>(e)];
    DayMarket dm = solve_day_market(inst, in);
    if (dm.status != LpStatus::Optimal)
      throw std::runtime_error("wholesale market infeasible on day " + std::to_string(e));
    auto put = [&](std::vector<DayPeriod>& dst, const std::vector<std::vector<double>>& src) {
      for (std::size_t a = 0; a < src.size(); ++a) dst[a][static_cast<std::size_t>(e)] = src[a];
    };
    put(m.dispatch, dm.g);
    put(m.flow, dm.f);
    put(m.angle, dm.theta);
    put(m.lmp, dm.lambda);
    put(m.flow_dual, dm.xi);
    put(m.gen_lower_dual, dm.gamma_lo);
    put(m.gen_upper_dual, dm.gamma_up);
    put(m.flow_lower_dual, dm.delta_lo);
    put(m.flow_upper_dual, dm.delta_up);
    m.primal_objective[static_cast<std::size_t>(e)] = dm.primal_objective;
    m.dual_objective[static_cast<std::size_t>(e)] = dm.dual_objective;
  }
  return m;
}

double market_primal_objective(const ValidatedInstance& inst, const MarketOutcome& m, int day) {
  double s = 0.0;
  for (int i = 0; i < inst.num_generators(); ++i)
    for (int t = 0; t < inst.num_periods(); ++t)
      s -= inst.generator(i).cost * m.dispatch[static_cast<std::size_t>(i)][static_cast<std::size_t>(day)][static_cast<std::size_t>(t)];
  return s;
}

double market_dual_objective(const ValidatedInstance& inst, const UtilityDecision& util, const MarketOutcome& m,
                             int day) {
  auto off = day_offers(inst, util, day);
  const auto e = static_cast<std::size_t>(day);
  double s = 0.0;
  for (int t = 0; t < inst.num_periods(); ++t) {
    const auto ut = static_cast<std::size_t>(t);
    for (int i = 0; i < inst.num_generators(); ++i)
      s += off[static_cast<std::size_t>(i)][ut] * m.gen_upper_dual[static_cast<std::size_t>(i)][e][ut];
    for (int n = 0; n < inst.num_nodes(); ++n) {
      int slot = inst.strategic_slot(n);
      double dem = slot < 0 ? inst.inflexible_demand(n, day, t) : util.demand[static_cast<std::size_t>(slot)][e][ut];
      s -= dem * m.lmp[static_cast<std::size_t>(n)][e][ut];
    }
    for (int l = 0; l < inst.num_lines(); ++l)
      s += inst.network().lines[static_cast<std::size_t>(l)].flow_max *
           (m.flow_upper_dual[static_cast<std::size_t>(l)][e][ut] + m.flow_lower_dual[static_cast<std::size_t>(l)][e][ut]);
  }
  return s;
}

}  // namespace rpsopt
