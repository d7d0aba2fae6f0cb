#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "rpsopt/ccg.hpp"
#include "rpsopt/market.hpp"
#include "rpsopt/stochastic.hpp"

namespace rpsopt {

namespace {

using std::size_t;
template <class T>
size_t z(T v) {
  return static_cast<size_t>(v);
}

Idx3 idx3(int a, int E, int T) { return Idx3(z(a), std::vector<std::vector<int>>(z(E), std::vector<int>(z(T), -1))); }

Expr col(int j, double c = 1.0) {
  Expr e;
  e.add(j, c);
  return e;
}

Expr cst(double v) {
  Expr e;
  e.constant = v;
  return e;
}

std::string tag(const std::string& prefix, const std::string& base, const std::string& id, int e, int t) {
  return prefix + base + "[" + id + "," + std::to_string(e) + "," + std::to_string(t) + "]";
}

using ExprFn = std::function<Expr(int, int, int)>;

double forecast(const Generator& g, int e, int t) { return g.forecast[z(e)][z(t)]; }

double gen_cap(const ValidatedInstance& inst, int i) {
  const auto& g = inst.generator(i);
  return g.is_candidate() ? candidate_capacity_cap(inst, i) : g.g_max;
}

struct BlockRoles {
  Block primal = Block::B;
  Block dual = Block::A;
};

// Market copy. Offers and demands are affine expressions in program columns.
LlBlock add_ll_block(BilinearProgram& bp, const ValidatedInstance& inst, const std::string& prefix, const ExprFn& offer,
                     const ExprFn& demand, bool with_duals, BlockRoles roles, Idx3* balance_rows = nullptr) {
  const int E = inst.num_days(), T = inst.num_periods(), G = inst.num_generators(), L = inst.num_lines(),
            N = inst.num_nodes();
  const auto& net = inst.network();
  LlBlock ll;
  ll.g = idx3(G, E, T);
  ll.f = idx3(L, E, T);
  ll.theta = idx3(N, E, T);
  ll.offer.assign(z(G), std::vector<std::vector<Expr>>(z(E), std::vector<Expr>(z(T))));
  ll.demand.assign(inst.strategic_nodes().size(), std::vector<std::vector<Expr>>(z(E), std::vector<Expr>(z(T))));
  if (balance_rows) *balance_rows = idx3(N, E, T);
  std::vector<char> is_ref(z(N), 0);
  for (int r : reference_nodes(inst)) is_ref[z(r)] = 1;

  auto dem = [&](int n, int e, int t) {
    int slot = inst.strategic_slot(n);
    return slot < 0 ? cst(inst.inflexible_demand(n, e, t)) : ll.demand[z(slot)][z(e)][z(t)];
  };

  for (int e = 0; e < E; ++e)
    for (int t = 0; t < T; ++t) {
      for (size_t k = 0; k < inst.strategic_nodes().size(); ++k) ll.demand[k][z(e)][z(t)] = demand(static_cast<int>(k), e, t);
      for (int i = 0; i < G; ++i) {
        const auto& gen = inst.generator(i);
        Expr o = offer(i, e, t);
        ll.offer[z(i)][z(e)][z(t)] = o;
        double ub = o.linear.empty() ? std::max(o.constant, 0.0) : gen_cap(inst, i);
        int g = bp.add_column(tag(prefix, "g", gen.id, e, t), 0.0, ub, roles.primal);
        ll.g[z(i)][z(e)][z(t)] = g;
        if (!o.linear.empty()) {
          Expr r = col(g);
          r.add_expr(o, -1.0);
          bp.add_row(tag(prefix, "offer", gen.id, e, t), RowType::Le, 0.0, r);
        }
      }
      for (int l = 0; l < L; ++l) {
        const auto& line = net.lines[z(l)];
        ll.f[z(l)][z(e)][z(t)] = bp.add_column(tag(prefix, "f", line.id, e, t), -line.flow_max, line.flow_max, roles.primal);
      }
      for (int n = 0; n < N; ++n) {
        bool ref = is_ref[z(n)];
        ll.theta[z(n)][z(e)][z(t)] =
            bp.add_column(tag(prefix, "theta", net.nodes[z(n)].id, e, t), ref ? 0.0 : -kInf, ref ? 0.0 : kInf, roles.primal);
      }
      for (int l = 0; l < L; ++l) {
        const auto& line = net.lines[z(l)];
        double b = 1.0 / line.reactance;
        Expr r = col(ll.f[z(l)][z(e)][z(t)]);
        r.add(ll.theta[z(line.from)][z(e)][z(t)], -b).add(ll.theta[z(line.to)][z(e)][z(t)], b);
        bp.add_row(tag(prefix, "flow", line.id, e, t), RowType::Eq, 0.0, r);
      }
      for (int n = 0; n < N; ++n) {
        Expr r;
        for (int i : inst.generators_at(n)) r.add(ll.g[z(i)][z(e)][z(t)], 1.0);
        for (int l = 0; l < L; ++l) {
          const auto& line = net.lines[z(l)];
          if (line.to == n) r.add(ll.f[z(l)][z(e)][z(t)], 1.0);
          if (line.from == n) r.add(ll.f[z(l)][z(e)][z(t)], -1.0);
        }
        r.add_expr(dem(n, e, t), -1.0);
        int row = bp.add_row(tag(prefix, "balance", net.nodes[z(n)].id, e, t), RowType::Eq, 0.0, r);
        if (balance_rows) (*balance_rows)[z(n)][z(e)][z(t)] = row;
      }
    }
  if (!with_duals) return ll;

  const double lam_box = dual_price_bound(inst);
  const double gam_box = dual_limit_bound(inst);
  ll.lambda = idx3(N, E, T);
  ll.xi = idx3(L, E, T);
  ll.gamma_lo = idx3(G, E, T);
  ll.gamma_up = idx3(G, E, T);
  ll.delta_lo = idx3(L, E, T);
  ll.delta_up = idx3(L, E, T);
  for (int e = 0; e < E; ++e) {
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n)
        ll.lambda[z(n)][z(e)][z(t)] = bp.add_column(tag(prefix, "lambda", net.nodes[z(n)].id, e, t), -lam_box, lam_box, roles.dual);
      for (int l = 0; l < L; ++l) {
        const auto& id = net.lines[z(l)].id;
        ll.xi[z(l)][z(e)][z(t)] = bp.add_column(tag(prefix, "xi", id, e, t), -kInf, kInf, roles.dual);
        ll.delta_lo[z(l)][z(e)][z(t)] = bp.add_column(tag(prefix, "delta_lo", id, e, t), 0.0, kInf, roles.dual);
        ll.delta_up[z(l)][z(e)][z(t)] = bp.add_column(tag(prefix, "delta_up", id, e, t), 0.0, kInf, roles.dual);
      }
      for (int i = 0; i < G; ++i) {
        const auto& id = inst.generator(i).id;
        ll.gamma_lo[z(i)][z(e)][z(t)] = bp.add_column(tag(prefix, "gamma_lo", id, e, t), 0.0, gam_box, roles.dual);
        ll.gamma_up[z(i)][z(e)][z(t)] = bp.add_column(tag(prefix, "gamma_up", id, e, t), 0.0, gam_box, roles.dual);
      }
      for (int i = 0; i < G; ++i) {
        const auto& gen = inst.generator(i);
        Expr r;
        r.add(ll.gamma_lo[z(i)][z(e)][z(t)], -1.0).add(ll.gamma_up[z(i)][z(e)][z(t)], 1.0);
        r.add(ll.lambda[z(gen.node)][z(e)][z(t)], -1.0);
        bp.add_row(tag(prefix, "dual_g", gen.id, e, t), RowType::Eq, -gen.cost, r);
      }
      for (int l = 0; l < L; ++l) {
        const auto& line = net.lines[z(l)];
        Expr r;
        r.add(ll.delta_lo[z(l)][z(e)][z(t)], -1.0).add(ll.delta_up[z(l)][z(e)][z(t)], 1.0).add(ll.xi[z(l)][z(e)][z(t)], 1.0);
        r.add(ll.lambda[z(line.to)][z(e)][z(t)], -1.0).add(ll.lambda[z(line.from)][z(e)][z(t)], 1.0);
        bp.add_row(tag(prefix, "dual_f", line.id, e, t), RowType::Eq, 0.0, r);
      }
      for (int n = 0; n < N; ++n) {
        Expr r;
        for (int l = 0; l < L; ++l) {
          const auto& line = net.lines[z(l)];
          if (line.from == n) r.add(ll.xi[z(l)][z(e)][z(t)], -1.0 / line.reactance);
          if (line.to == n) r.add(ll.xi[z(l)][z(e)][z(t)], 1.0 / line.reactance);
        }
        if (!r.linear.empty()) bp.add_row(tag(prefix, "dual_theta", net.nodes[z(n)].id, e, t), RowType::Eq, 0.0, r);
      }
    }
    // Strong duality: primal welfare equals the dual objective.
    Expr sd;
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < G; ++i) {
        sd.add(ll.g[z(i)][z(e)][z(t)], -inst.generator(i).cost);
        sd.add_affine_product(ll.offer[z(i)][z(e)][z(t)], col(ll.gamma_up[z(i)][z(e)][z(t)]), -1.0);
      }
      for (int n = 0; n < N; ++n) sd.add_affine_product(dem(n, e, t), col(ll.lambda[z(n)][z(e)][z(t)]), 1.0);
      for (int l = 0; l < L; ++l) {
        double F = net.lines[z(l)].flow_max;
        sd.add(ll.delta_lo[z(l)][z(e)][z(t)], -F).add(ll.delta_up[z(l)][z(e)][z(t)], -F);
      }
    }
    ll.duality_rows.push_back(bp.add_row(prefix + "strong_duality[" + std::to_string(e) + "]", RowType::Eq, 0.0, sd));
  }
  return ll;
}

// Utility expansion and offers with their operational limits. Fills blk (except ll) and returns the offer map.
ExprFn add_ml_block(BilinearProgram& bp, const ValidatedInstance& inst, const std::string& prefix, ResponseBlock& blk,
                    const ExprFn& demand, Block role, Idx3* balance_rows = nullptr) {
  const int E = inst.num_days(), T = inst.num_periods(), G = inst.num_generators();
  const auto& sn = inst.strategic_nodes();
  blk.gmax.assign(z(G), -1);
  blk.gbar = idx3(G, E, T);
  blk.p = idx3(static_cast<int>(sn.size()), E, T);
  if (balance_rows) *balance_rows = idx3(static_cast<int>(sn.size()), E, T);

  for (int i : inst.candidates())
    blk.gmax[z(i)] = bp.add_column(prefix + "gmax[" + inst.generator(i).id + "]", 0.0, candidate_capacity_cap(inst, i), role);
  for (int i : inst.utility_controllables())
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < T; ++t)
        blk.gbar[z(i)][z(e)][z(t)] = bp.add_column(tag(prefix, "gbar", inst.generator(i).id, e, t), 0.0, gen_cap(inst, i), role);
  for (size_t k = 0; k < sn.size(); ++k) {
    double P = inst.network().nodes[z(sn[k])].interface_max;
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < T; ++t)
        blk.p[k][z(e)][z(t)] = bp.add_column(tag(prefix, "p", inst.network().nodes[z(sn[k])].id, e, t), -P, P, role);
  }

  // Copies of the index tables so the closure outlives `blk` moves.
  auto gmax = blk.gmax;
  auto gbar = blk.gbar;
  ExprFn offer = [&inst, gmax, gbar](int i, int e, int t) {
    const auto& g = inst.generator(i);
    if (!inst.is_utility_generator(i)) return cst(nonstrategic_offer(inst, i, e, t));
    if (!g.is_renewable()) return col(gbar[z(i)][z(e)][z(t)]);
    if (g.is_candidate()) return col(gmax[z(i)], forecast(g, e, t));
    return cst(forecast(g, e, t) * g.g_max);
  };

  for (int i : inst.utility_controllables()) {
    const auto& g = inst.generator(i);
    for (int e = 0; e < E; ++e)
      for (int t = 1; t < T; ++t) {
        Expr r = col(blk.gbar[z(i)][z(e)][z(t)]);
        r.add(blk.gbar[z(i)][z(e)][z(t - 1)], -1.0);
        if (std::isfinite(g.ramp_max)) bp.add_row(tag(prefix, "ramp_up", g.id, e, t), RowType::Le, g.ramp_max, r);
        if (std::isfinite(g.ramp_min)) bp.add_row(tag(prefix, "ramp_down", g.id, e, t), RowType::Ge, g.ramp_min, r);
      }
  }
  for (size_t k = 0; k < sn.size(); ++k)
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < T; ++t) {
        Expr r = col(blk.p[k][z(e)][z(t)]);
        for (int i : inst.generators_at(sn[k]))
          if (inst.is_utility_generator(i)) r.add_expr(offer(i, e, t));
        r.add_expr(demand(static_cast<int>(k), e, t), -1.0);
        int row = bp.add_row(tag(prefix, "supply", inst.network().nodes[z(sn[k])].id, e, t), RowType::Eq, 0.0, r);
        if (balance_rows) (*balance_rows)[k][z(e)][z(t)] = row;
      }
  for (const auto& cc : deterministic_generation_constraints(inst, inst.policy().eta)) {
    Expr r;
    r.add_expr(offer(cc.gen, cc.day, cc.period), cc.offer_coef);
    for (auto [j, c] : cc.capacity_coefs) r.add(blk.gmax[z(j)], c);
    double rhs = cc.rhs;
    bool norm = cc.margin != 0.0 && !cc.norm_weights.empty();
    if (cc.margin != 0.0 && !norm) rhs -= cc.margin * std::sqrt(cc.norm_constant);
    int row = bp.add_row(prefix + "chance[" + cc.id + "]", RowType::Le, rhs, r);
    if (norm) {
      std::vector<std::pair<int, double>> w;
      for (auto [j, s] : cc.norm_weights) w.emplace_back(blk.gmax[z(j)], s);
      bp.add_norm_term(row, cc.margin, cc.norm_constant, std::move(w));
    }
  }
  return offer;
}

// Utility profit without the tariff revenue term pi * d (which cancels in optimality cuts).
Expr utility_profit_expr(const ValidatedInstance& inst, const LlBlock& ll, const std::function<Expr(int)>& capacity,
                         const Expr& tau_e, const Expr& tau_c_daily) {
  const auto& sn = inst.strategic_nodes();
  Expr o;
  for (int e = 0; e < inst.num_days(); ++e) {
    double w = inst.day_weight(e);
    for (int t = 0; t < inst.num_periods(); ++t) {
      for (size_t k = 0; k < sn.size(); ++k)
        o.add_affine_product(col(ll.lambda[z(sn[k])][z(e)][z(t)]), ll.demand[k][z(e)][z(t)], -w);
      for (int i : inst.utility_generators()) {
        const auto& g = inst.generator(i);
        int gc = ll.g[z(i)][z(e)][z(t)];
        o.add_product(ll.lambda[z(g.node)][z(e)][z(t)], gc, w);
        o.add(gc, -w * g.cost);
        if (g.is_renewable()) o.add_affine_product(tau_e, col(gc), w);
      }
    }
  }
  for (int i : inst.candidates()) {
    Expr cap = capacity(i);
    o.add_expr(cap, -inst.daily_capital_cost(i));
    if (inst.generator(i).is_renewable()) o.add_affine_product(tau_c_daily, cap, 1.0);
  }
  return o;
}

Expr tariff_revenue_expr(const ValidatedInstance& inst, const LlBlock& ll, const std::function<Expr(int, int)>& tariff) {
  Expr o;
  for (int e = 0; e < inst.num_days(); ++e)
    for (int t = 0; t < inst.num_periods(); ++t)
      for (size_t k = 0; k < inst.strategic_nodes().size(); ++k)
        o.add_affine_product(tariff(static_cast<int>(k), t), ll.demand[k][z(e)][z(t)], inst.day_weight(e));
  return o;
}

// Closed-form projection of a sampled utility plan onto the plan constraints, then a market solve.
struct Projection {
  BilinearProgram prog;
  ResponseBlock blk;
  Idx3 supply_rows;    // [slot][e][t]
  Idx3 balance_rows;   // [node][e][t]
  std::vector<std::pair<int, int>> targets;  // (distance row, column of the source block)
};

std::shared_ptr<Projection> make_projection(const ValidatedInstance& inst, const ResponseBlock& src) {
  auto pr = std::make_shared<Projection>();
  auto& bp = pr->prog;
  const ExprFn zero = [](int, int, int) { return Expr{}; };
  ExprFn offer = add_ml_block(bp, inst, "", pr->blk, zero, Block::Shared, &pr->supply_rows);
  pr->blk.ll = add_ll_block(bp, inst, "", offer, zero, false, {Block::Shared, Block::Shared}, &pr->balance_rows);
  Expr obj;
  auto target = [&](int pc, int sc) {
    int u = bp.add_column("dev+" + bp.linear.col_name(pc), 0.0, kInf, Block::Shared);
    int v = bp.add_column("dev-" + bp.linear.col_name(pc), 0.0, kInf, Block::Shared);
    Expr r = col(pc);
    r.add(u, -1.0).add(v, 1.0);
    int row = bp.add_row("target:" + bp.linear.col_name(pc), RowType::Eq, 0.0, r);
    double scale = 1.0 / (1.0 + bp.linear.upper(pc) - bp.linear.lower(pc));
    obj.add(u, scale).add(v, scale);
    pr->targets.emplace_back(row, sc);
  };
  for (size_t i = 0; i < src.gmax.size(); ++i)
    if (src.gmax[i] >= 0) target(pr->blk.gmax[i], src.gmax[i]);
  for (size_t i = 0; i < src.gbar.size(); ++i)
    for (size_t e = 0; e < src.gbar[i].size(); ++e)
      for (size_t t = 0; t < src.gbar[i][e].size(); ++t)
        if (src.gbar[i][e][t] >= 0) target(pr->blk.gbar[i][e][t], src.gbar[i][e][t]);
  bp.set_objective(Sense::Minimize, obj);
  return pr;
}

// Projects the plan held in x (columns of `dst`), solves the market for the given demand and writes both back.
bool complete_response(const ValidatedInstance& inst, const Projection& pr, const ResponseBlock& dst,
                       const std::vector<std::vector<std::vector<double>>>& demand, std::vector<double>& x) {
  BilinearProgram bp = pr.prog;
  const auto& sn = inst.strategic_nodes();
  for (auto [row, sc] : pr.targets) bp.linear.row(row).rhs = x[z(sc)];
  for (size_t k = 0; k < sn.size(); ++k)
    for (int e = 0; e < inst.num_days(); ++e)
      for (int t = 0; t < inst.num_periods(); ++t) {
        double d = demand[k][z(e)][z(t)];
        bp.linear.row(pr.supply_rows[k][z(e)][z(t)]).rhs += d;
        bp.linear.row(pr.balance_rows[z(sn[k])][z(e)][z(t)]).rhs += d;
      }
  std::vector<double> near(z(bp.num_cols()), 0.0);
  auto sol = solve_convex(bp, near);
  if (!sol) return false;
  UtilityDecision util = extract_utility(inst, pr.blk, *sol);
  util.demand = demand;
  MarketOutcome m;
  const int E = inst.num_days();
  auto shape = [&](std::vector<DayPeriod>& v, int n) {
    v.assign(z(n), DayPeriod(z(E), std::vector<double>(z(inst.num_periods()), 0.0)));
  };
  shape(m.dispatch, inst.num_generators());
  shape(m.flow, inst.num_lines());
  shape(m.angle, inst.num_nodes());
  shape(m.lmp, inst.num_nodes());
  shape(m.flow_dual, inst.num_lines());
  shape(m.gen_lower_dual, inst.num_generators());
  shape(m.gen_upper_dual, inst.num_generators());
  shape(m.flow_lower_dual, inst.num_lines());
  shape(m.flow_upper_dual, inst.num_lines());
  for (int e = 0; e < E; ++e) {
    MarketInput in;
    in.day = e;
    in.offers = day_offers(inst, util, e);
    for (size_t k = 0; k < sn.size(); ++k) in.demand.push_back(demand[k][z(e)]);
    DayMarket dm = solve_day_market(inst, in);
    if (dm.status != LpStatus::Optimal) return false;
    auto put = [&](std::vector<DayPeriod>& dstv, const std::vector<std::vector<double>>& srcv) {
      for (size_t a = 0; a < srcv.size(); ++a)
        for (size_t t = 0; t < srcv[a].size(); ++t) dstv[a][z(e)][t] = srcv[a][t];
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
  }
  fill_response(inst, dst, util, m, x);
  return true;
}

std::vector<std::vector<std::vector<double>>> demand_for(const ValidatedInstance& inst, const RegulatorDecision& reg) {
  return flexible_demand(inst, reg);
}

void fill_ll(const ValidatedInstance& inst, const LlBlock& ll, const MarketOutcome& m, std::vector<double>& x) {
  auto put = [&](const Idx3& idx, const std::vector<DayPeriod>& v) {
    if (v.empty()) return;
    for (size_t a = 0; a < idx.size(); ++a)
      for (size_t e = 0; e < idx[a].size(); ++e)
        for (size_t t = 0; t < idx[a][e].size(); ++t)
          if (idx[a][e][t] >= 0) x[z(idx[a][e][t])] = v[a][e][t];
  };
  (void)inst;
  put(ll.g, m.dispatch);
  put(ll.f, m.flow);
  put(ll.theta, m.angle);
  put(ll.lambda, m.lmp);
  put(ll.xi, m.flow_dual);
  put(ll.gamma_lo, m.gen_lower_dual);
  put(ll.gamma_up, m.gen_upper_dual);
  put(ll.delta_lo, m.flow_lower_dual);
  put(ll.delta_up, m.flow_upper_dual);
}


// Master point for a fixed regulator decision.
struct Completion {
  bool ok = false;
  std::vector<double> x;
  double profit = 0.0;
};

Completion complete_point(const ValidatedInstance& inst, const MasterModel& m, int ncols,
                          const std::vector<UtilityDecision>& plans, const RegulatorDecision& reg, const CcgConfig& cfg,
                          std::uint64_t seed, const std::vector<double>& warm) {
  Completion out;
  out.x.assign(z(ncols), 0.0);
  auto& x = out.x;
  for (size_t k = 0; k < m.pi_on.size(); ++k) {
    x[z(m.pi_on[k])] = reg.pi_on[k];
    x[z(m.pi_off[k])] = reg.pi_off[k];
  }
  x[z(m.tau_e)] = reg.tau_e;
  x[z(m.tau_c)] = inst.capacity_incentive_daily(reg.tau_c);

  SubproblemModel sp = build_subproblem(inst, reg, cfg);
  if (warm.size() == z(ncols)) {
    std::vector<double> w(z(sp.bp.num_cols()), 0.0);
    fill_response(inst, sp.blk, extract_utility(inst, m.live, warm), extract_market(inst, m.live.ll, warm), w);
    sp.bp.warm_starts.push_back(std::move(w));
  }
  MultistartOptions o = cfg.completion;
  o.seed = seed;
  SolveReport rep;
  try {
    rep = solve_multistart(sp.bp, o);
  } catch (const std::exception&) {
    return out;
  }
  UtilityDecision util = extract_utility(inst, sp.blk, rep.point);
  MarketOutcome market = extract_market(inst, sp.blk.ll, rep.point);
  fill_response(inst, m.live, util, market, x);
  for (size_t j = 0; j < m.aux.size(); ++j) {
    UtilityDecision u = plans[j];
    u.demand = util.demand;
    try {
      fill_ll(inst, m.aux[j], solve_market(inst, u), x);
    } catch (const std::exception&) {
    }
  }
  out.ok = true;
  out.profit = rep.best_objective;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- bounds

double dual_price_bound(const ValidatedInstance& inst) { return 2.0 * std::max(1.0, inst.largest_marginal_cost()); }
double dual_limit_bound(const ValidatedInstance& inst) { return 3.0 * std::max(1.0, inst.largest_marginal_cost()); }

double candidate_capacity_cap(const ValidatedInstance& inst, int gen) {
  const auto& g = inst.generator(gen);
  if (std::isfinite(g.build_max)) return g.build_max;
  double peak = 0.0;
  for (int e = 0; e < inst.num_days(); ++e)
    for (int t = 0; t < inst.num_periods(); ++t) {
      double s = 0.0;
      for (int n = 0; n < inst.num_nodes(); ++n)
        s += inst.is_strategic_node(n) ? inst.utility_intercept(n, e, t) / inst.utility_slope() : inst.inflexible_demand(n, e, t);
      peak = std::max(peak, s);
    }
  return 2.0 * peak;
}

double energy_incentive_cap(const ValidatedInstance& inst, const CcgConfig& cfg) {
  return cfg.tau_e_max >= 0 ? cfg.tau_e_max : std::max(1.0, inst.largest_marginal_cost());
}

double capacity_incentive_cap(const ValidatedInstance& inst, const CcgConfig& cfg) {
  if (cfg.tau_c_max >= 0) return cfg.tau_c_max;
  double m = 0.0;
  for (int i : inst.candidate_renewables()) m = std::max(m, inst.generator(i).capital_cost / 1000.0);
  return m;
}

// ---------------------------------------------------------------- extraction

UtilityDecision extract_utility(const ValidatedInstance& inst, const ResponseBlock& blk, const std::vector<double>& x) {
  const int E = inst.num_days(), T = inst.num_periods(), G = inst.num_generators();
  UtilityDecision u;
  u.capacity.assign(z(G), 0.0);
  for (int i = 0; i < G; ++i)
    if (blk.gmax[z(i)] >= 0) u.capacity[z(i)] = x[z(blk.gmax[z(i)])];
  u.offers.assign(z(G), DayPeriod(z(E), std::vector<double>(z(T), 0.0)));
  for (int i = 0; i < G; ++i)
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < T; ++t) {
        const auto& g = inst.generator(i);
        double v;
        if (blk.gbar[z(i)][z(e)][z(t)] >= 0) v = x[z(blk.gbar[z(i)][z(e)][z(t)])];
        else if (!inst.is_utility_generator(i)) v = nonstrategic_offer(inst, i, e, t);
        else if (g.is_candidate()) v = forecast(g, e, t) * u.capacity[z(i)];
        else v = g.is_renewable() ? forecast(g, e, t) * g.g_max : 0.0;
        u.offers[z(i)][z(e)][z(t)] = v;
      }
  const size_t S = blk.p.size();
  u.interface_flow.assign(S, DayPeriod(z(E), std::vector<double>(z(T), 0.0)));
  u.demand.assign(S, DayPeriod(z(E), std::vector<double>(z(T), 0.0)));
  for (size_t k = 0; k < S; ++k)
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < T; ++t) {
        u.interface_flow[k][z(e)][z(t)] = x[z(blk.p[k][z(e)][z(t)])];
        if (!blk.ll.demand.empty()) u.demand[k][z(e)][z(t)] = blk.ll.demand[k][z(e)][z(t)].evaluate(x);
      }
  return u;
}

MarketOutcome extract_market(const ValidatedInstance& inst, const LlBlock& ll, const std::vector<double>& x) {
  MarketOutcome m;
  auto get = [&](const Idx3& idx) {
    std::vector<DayPeriod> v(idx.size());
    for (size_t a = 0; a < idx.size(); ++a) {
      v[a].assign(idx[a].size(), {});
      for (size_t e = 0; e < idx[a].size(); ++e)
        for (int c : idx[a][e]) v[a][e].push_back(c >= 0 ? x[z(c)] : 0.0);
    }
    return v;
  };
  m.dispatch = get(ll.g);
  m.flow = get(ll.f);
  m.angle = get(ll.theta);
  m.lmp = get(ll.lambda);
  m.flow_dual = get(ll.xi);
  m.gen_lower_dual = get(ll.gamma_lo);
  m.gen_upper_dual = get(ll.gamma_up);
  m.flow_lower_dual = get(ll.delta_lo);
  m.flow_upper_dual = get(ll.delta_up);
  const int E = inst.num_days(), T = inst.num_periods();
  for (int e = 0; e < E; ++e) {
    double p = 0.0, d = 0.0;
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < inst.num_generators(); ++i) {
        p -= inst.generator(i).cost * m.dispatch[z(i)][z(e)][z(t)];
        if (!m.gen_upper_dual.empty()) d += ll.offer[z(i)][z(e)][z(t)].evaluate(x) * m.gen_upper_dual[z(i)][z(e)][z(t)];
      }
      if (!m.lmp.empty()) {
        for (int n = 0; n < inst.num_nodes(); ++n) {
          int slot = inst.strategic_slot(n);
          double dem = slot < 0 ? inst.inflexible_demand(n, e, t) : ll.demand[z(slot)][z(e)][z(t)].evaluate(x);
          d -= dem * m.lmp[z(n)][z(e)][z(t)];
        }
        for (int l = 0; l < inst.num_lines(); ++l)
          d += inst.network().lines[z(l)].flow_max * (m.flow_lower_dual[z(l)][z(e)][z(t)] + m.flow_upper_dual[z(l)][z(e)][z(t)]);
      }
    }
    m.primal_objective.push_back(p);
    m.dual_objective.push_back(d);
  }
  return m;
}

RegulatorDecision extract_regulator(const ValidatedInstance& inst, const MasterModel& mp, const std::vector<double>& x) {
  RegulatorDecision r;
  for (int c : mp.pi_on) r.pi_on.push_back(x[z(c)]);
  for (int c : mp.pi_off) r.pi_off.push_back(x[z(c)]);
  r.tau_e = x[z(mp.tau_e)];
  r.tau_c = inst.capacity_incentive_per_kw(x[z(mp.tau_c)]);
  return r;
}

void fill_response(const ValidatedInstance& inst, const ResponseBlock& blk, const UtilityDecision& util,
                   const MarketOutcome& market, std::vector<double>& x) {
  for (size_t i = 0; i < blk.gmax.size(); ++i)
    if (blk.gmax[i] >= 0) x[z(blk.gmax[i])] = util.capacity[i];
  for (size_t i = 0; i < blk.gbar.size(); ++i)
    for (size_t e = 0; e < blk.gbar[i].size(); ++e)
      for (size_t t = 0; t < blk.gbar[i][e].size(); ++t)
        if (blk.gbar[i][e][t] >= 0) x[z(blk.gbar[i][e][t])] = util.offers[i][e][t];
  for (size_t k = 0; k < blk.p.size(); ++k)
    for (size_t e = 0; e < blk.p[k].size(); ++e)
      for (size_t t = 0; t < blk.p[k][e].size(); ++t) x[z(blk.p[k][e][t])] = util.interface_flow[k][e][t];
  fill_ll(inst, blk.ll, market, x);
}

// ---------------------------------------------------------------- subproblem

SubproblemModel build_subproblem(const ValidatedInstance& inst, const RegulatorDecision& reg, const CcgConfig& cfg) {
  (void)cfg;
  SubproblemModel sp;
  sp.reg = reg;
  auto& bp = sp.bp;
  auto demand = demand_for(inst, reg);
  ExprFn dem = [demand](int k, int e, int t) { return cst(demand[z(k)][z(e)][z(t)]); };
  ExprFn offer = add_ml_block(bp, inst, "", sp.blk, dem, Block::B);
  sp.blk.ll = add_ll_block(bp, inst, "", offer, dem, true, {});

  Expr tau_e = cst(reg.tau_e);
  Expr tau_c = cst(inst.capacity_incentive_daily(reg.tau_c));
  auto gmax = sp.blk.gmax;
  Expr obj = utility_profit_expr(inst, sp.blk.ll, [gmax](int i) { return col(gmax[z(i)]); }, tau_e, tau_c);
  obj.add_expr(tariff_revenue_expr(inst, sp.blk.ll, [&](int k, int t) { return cst(reg.tariff(inst, k, t)); }));
  bp.set_objective(Sense::Maximize, obj);

  auto proj = make_projection(inst, sp.blk);
  ResponseBlock blk = sp.blk;
  const ValidatedInstance* ip = &inst;
  bp.repair = [ip, proj, blk, demand](const std::vector<double>& sample) -> std::optional<std::vector<double>> {
    std::vector<double> x = sample;
    if (!complete_response(*ip, *proj, blk, demand, x)) return std::nullopt;
    return x;
  };
  return sp;
}

// ---------------------------------------------------------------- master

MasterModel build_master(const ValidatedInstance& inst, const std::vector<UtilityDecision>& plans, const CcgConfig& cfg) {
  MasterModel mp;
  auto& bp = mp.bp;
  const auto& sn = inst.strategic_nodes();
  const int E = inst.num_days(), T = inst.num_periods();
  const double N = inst.utility_slope();

  for (size_t k = 0; k < sn.size(); ++k) {
    int n = sn[k];
    double lo = 0.0;
    for (int t = 0; t < T; ++t) lo = std::max(lo, -inst.response_offset(n, t));
    double hi = std::max(lo, inst.tariff_ceiling(n));
    const auto& id = inst.network().nodes[z(n)].id;
    mp.pi_on.push_back(bp.add_column("pi_on[" + id + "]", lo, hi, Block::B));
    mp.pi_off.push_back(bp.add_column("pi_off[" + id + "]", lo, hi, Block::B));
  }
  double te_max = energy_incentive_cap(inst, cfg);
  double tc_max = inst.capacity_incentive_daily(capacity_incentive_cap(inst, cfg));
  if (inst.candidate_renewables().empty()) tc_max = 0.0;
  mp.tau_e = bp.add_column("tau_e", 0.0, te_max, Block::A);
  mp.tau_c = bp.add_column("tau_c", 0.0, tc_max, Block::A);
  if (cfg.pin_tau_e) bp.linear.set_bounds(mp.tau_e, *cfg.pin_tau_e, *cfg.pin_tau_e);
  if (cfg.pin_tau_c) {
    double v = inst.capacity_incentive_daily(*cfg.pin_tau_c);
    bp.linear.set_bounds(mp.tau_c, v, v);
  }
  bp.tie_break_columns = {mp.tau_c, mp.tau_e};
  for (size_t k = 0; k < sn.size(); ++k) {
    bp.tie_break_columns.push_back(mp.pi_on[k]);
    bp.tie_break_columns.push_back(mp.pi_off[k]);
  }

  auto pi_on = mp.pi_on, pi_off = mp.pi_off;
  auto tariff = [&inst, pi_on, pi_off](int k, int t) {
    return col(inst.on_peak(t) ? pi_on[z(k)] : pi_off[z(k)]);
  };
  ExprFn dem = [&inst, tariff, N](int k, int e, int t) {
    int n = inst.strategic_nodes()[z(k)];
    Expr d = cst((inst.utility_intercept(n, e, t) - inst.response_offset(n, t)) / N);
    d.add_expr(tariff(k, t), -1.0 / N);
    return d;
  };

  ExprFn offer = add_ml_block(bp, inst, "", mp.live, dem, Block::B);
  mp.live.ll = add_ll_block(bp, inst, "", offer, dem, true, {});
  const Expr tau_e = col(mp.tau_e), tau_c = col(mp.tau_c);

  // Regulator cost.
  Expr obj;
  for (int e = 0; e < E; ++e) {
    double w = inst.day_weight(e);
    for (int t = 0; t < T; ++t) {
      for (size_t k = 0; k < sn.size(); ++k) obj.add_expr(tariff(static_cast<int>(k), t), w * inst.inflexible_demand(sn[k], e, t));
      for (int i : inst.utility_renewables()) obj.add_product(mp.tau_e, mp.live.ll.g[z(i)][z(e)][z(t)], w);
    }
  }
  for (int i : inst.candidate_renewables()) obj.add_product(mp.tau_c, mp.live.gmax[z(i)], 1.0);
  bp.set_objective(Sense::Minimize, obj);

  // Budget and renewable share, per day.
  for (int e = 0; e < E; ++e) {
    Expr spend, ren;
    for (int t = 0; t < T; ++t)
      for (int i : inst.utility_renewables()) {
        spend.add_product(mp.tau_e, mp.live.ll.g[z(i)][z(e)][z(t)], 1.0);
        ren.add(mp.live.ll.g[z(i)][z(e)][z(t)], 1.0);
      }
    for (int i : inst.candidate_renewables()) spend.add_product(mp.tau_c, mp.live.gmax[z(i)], 1.0);
    if (std::isfinite(inst.policy().budget) && !spend.products.empty())
      bp.add_row("budget[" + std::to_string(e) + "]", RowType::Le, inst.policy().budget, spend);
    if (inst.policy().rps_fraction > 0)
      bp.add_row("rps[" + std::to_string(e) + "]", RowType::Ge, inst.policy().rps_fraction * state_inflexible_energy(inst, e), ren);
  }

  auto live_gmax = mp.live.gmax;
  Expr live_profit = utility_profit_expr(inst, mp.live.ll, [live_gmax](int i) { return col(live_gmax[z(i)]); }, tau_e, tau_c);
  {
    Expr ra = live_profit;
    ra.add_expr(tariff_revenue_expr(inst, mp.live.ll, tariff));
    mp.adequacy_row = bp.add_row("revenue_adequacy", RowType::Ge, 0.0, ra);
  }

  for (size_t j = 0; j < plans.size(); ++j) {
    const auto& plan = plans[j];
    std::string prefix = "c" + std::to_string(j) + ":";
    ExprFn fixed_offer = [&inst, &plan](int i, int e, int t) {
      if (!inst.is_utility_generator(i)) return cst(nonstrategic_offer(inst, i, e, t));
      return cst(plan.offers[z(i)][z(e)][z(t)]);
    };
    mp.aux.push_back(add_ll_block(bp, inst, prefix, fixed_offer, dem, true, {}));
    auto caps = plan.capacity;
    Expr stored = utility_profit_expr(inst, mp.aux.back(), [caps](int i) { return cst(caps[z(i)]); }, tau_e, tau_c);
    Expr cut = live_profit;
    cut.add_expr(stored, -1.0);
    mp.cut_rows.push_back(bp.add_row("cut[" + std::to_string(j) + "]", RowType::Ge, 0.0, cut));
  }

  // Repair: tariffs and incentives from the sample, the live block completed
  // with the utility's best response; tariffs are lifted toward their ceiling
  // while the completed point loses money.
  MasterModel shape;
  shape.live = mp.live;
  shape.aux = mp.aux;
  shape.pi_on = mp.pi_on;
  shape.pi_off = mp.pi_off;
  shape.tau_e = mp.tau_e;
  shape.tau_c = mp.tau_c;
  auto shared = std::make_shared<MasterModel>(std::move(shape));
  auto plan_copy = std::make_shared<std::vector<UtilityDecision>>(plans);
  const ValidatedInstance* ip = &inst;
  CcgConfig ccfg = cfg;
  ccfg.on_iterate = nullptr;
  const int ncols = bp.num_cols();
  std::vector<double> lo_b(z(ncols)), hi_b(z(ncols));
  for (int j = 0; j < ncols; ++j) {
    lo_b[z(j)] = bp.linear.lower(j);
    hi_b[z(j)] = bp.linear.upper(j);
  }
  bp.repair = [ip, shared, plan_copy, ccfg, ncols, lo_b, hi_b](const std::vector<double>& sample) -> std::optional<std::vector<double>> {
    const auto& inst = *ip;
    const auto& m = *shared;
    std::vector<double> base = sample;
    for (int j : {m.tau_e, m.tau_c}) base[z(j)] = std::clamp(base[z(j)], lo_b[z(j)], hi_b[z(j)]);
    std::uint64_t seed = ccfg.completion.seed;
    for (double v : base) seed = seed * 1099511628211ull + static_cast<std::uint64_t>(std::llround(std::abs(v) * 1e6));
    Completion best;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      std::vector<double> y = base;
      for (size_t k = 0; k < m.pi_on.size(); ++k)
        for (int c : {m.pi_on[k], m.pi_off[k]}) {
          double v = std::clamp(y[z(c)], lo_b[z(c)], hi_b[z(c)]);
          y[z(c)] = v + s * (hi_b[z(c)] - v);
        }
      RegulatorDecision reg = extract_regulator(inst, m, y);
      Completion cpl = complete_point(inst, m, ncols, *plan_copy, reg, ccfg, seed, sample);
      if (!cpl.ok) continue;
      best = std::move(cpl);
      if (best.profit >= -1e-7) break;
    }
    if (!best.ok) return std::nullopt;
    return best.x;
  };
  return mp;
}

std::vector<double> complete_master_point(const ValidatedInstance& inst, const MasterModel& mp,
                                          const std::vector<UtilityDecision>& plans, const RegulatorDecision& reg,
                                          const CcgConfig& cfg, std::uint64_t seed, const std::vector<double>& warm) {
  return complete_point(inst, mp, mp.bp.num_cols(), plans, reg, cfg, seed, warm).x;
}

std::vector<double> polish_master(const ValidatedInstance& inst, const MasterModel& mp,
                                  const std::vector<UtilityDecision>& plans, const CcgConfig& cfg,
                                  std::vector<double> x, std::uint64_t seed) {
  const auto& bp = mp.bp;
  const double tol = cfg.master.feasibility_tol;
  if (cfg.polish_evaluations <= 0 || bp.max_violation(x) > tol) return x;
  std::vector<int> vars;
  for (size_t k = 0; k < mp.pi_on.size(); ++k) {
    vars.push_back(mp.pi_on[k]);
    vars.push_back(mp.pi_off[k]);
  }
  vars.push_back(mp.tau_e);
  vars.push_back(mp.tau_c);
  std::vector<double> step, floor;
  std::vector<int> live_vars;
  for (int j : vars) {
    double range = bp.linear.upper(j) - bp.linear.lower(j);
    if (!(range > 0.0) || !std::isfinite(range)) continue;
    live_vars.push_back(j);
    step.push_back(range / 8.0);
    floor.push_back(range * 1e-4);
  }
  double obj = bp.objective(x);
  int evals = 0;
  std::uint64_t trial = 0;
  while (evals < cfg.polish_evaluations) {
    bool improved = false;
    for (size_t v = 0; v < live_vars.size() && evals < cfg.polish_evaluations; ++v) {
      int j = live_vars[v];
      for (double dir : {-1.0, 1.0}) {
        std::vector<double> y = x;
        y[z(j)] = std::clamp(x[z(j)] + dir * step[v], bp.linear.lower(j), bp.linear.upper(j));
        if (y[z(j)] == x[z(j)]) continue;
        ++evals;
        RegulatorDecision reg = extract_regulator(inst, mp, y);
        Completion c = complete_point(inst, mp, bp.num_cols(), plans, reg, cfg, seed + 7919u * ++trial, x);
        if (!c.ok || bp.max_violation(c.x) > tol) continue;
        double val = bp.objective(c.x);
        if (val < obj - 1e-9 * std::max(1.0, std::abs(obj))) {
          x = std::move(c.x);
          obj = val;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool any = false;
      for (size_t v = 0; v < step.size(); ++v) {
        step[v] *= 0.5;
        any |= step[v] >= floor[v];
      }
      if (!any) break;
    }
  }
  return x;
}

}  // namespace rpsopt
