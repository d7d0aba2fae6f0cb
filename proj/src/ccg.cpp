#include <chrono>
#include <cmath>

#include "rpsopt/ccg.hpp"
#include "rpsopt/market.hpp"

namespace rpsopt {

double ccg_gap(double upper, double lower) { return (upper - lower) / std::max(1.0, std::abs(upper)); }

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Stored {
  RegulatorDecision reg;
  UtilityDecision util;
  MarketOutcome market;
};

std::vector<double> master_start(const ValidatedInstance& inst, const MasterModel& mp, const RegulatorDecision& reg,
                                 const UtilityDecision& util, const MarketOutcome& market) {
  std::vector<double> x(static_cast<std::size_t>(mp.bp.num_cols()), 0.0);
  for (std::size_t k = 0; k < mp.pi_on.size(); ++k) {
    x[static_cast<std::size_t>(mp.pi_on[k])] = reg.pi_on[k];
    x[static_cast<std::size_t>(mp.pi_off[k])] = reg.pi_off[k];
  }
  x[static_cast<std::size_t>(mp.tau_e)] = reg.tau_e;
  x[static_cast<std::size_t>(mp.tau_c)] = inst.capacity_incentive_daily(reg.tau_c);
  fill_response(inst, mp.live, util, market, x);
  return x;
}

bool same_decision(const RegulatorDecision& a, const RegulatorDecision& b) {
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); };
  if (!close(a.tau_e, b.tau_e) || !close(a.tau_c, b.tau_c)) return false;
  for (std::size_t k = 0; k < a.pi_on.size(); ++k)
    if (!close(a.pi_on[k], b.pi_on[k]) || !close(a.pi_off[k], b.pi_off[k])) return false;
  return true;
}

}  // namespace

CcgResult run_ccg(const ValidatedInstance& inst, const CcgConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  CcgResult res;
  std::vector<UtilityDecision> plans;
  std::vector<Stored> history;
  std::vector<double> prev_master;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    CcgIterate rec;
    rec.iteration = it;

    auto tm = std::chrono::steady_clock::now();
    MasterModel mp = build_master(inst, plans, cfg);
    if (!prev_master.empty()) {
      auto w = prev_master;
      w.resize(static_cast<std::size_t>(mp.bp.num_cols()), 0.0);
      mp.bp.warm_starts.push_back(std::move(w));
    }
    for (const auto& h : history) mp.bp.warm_starts.push_back(master_start(inst, mp, h.reg, h.util, h.market));
    MultistartOptions mo = cfg.master;
    mo.seed = cfg.master.seed + static_cast<std::uint64_t>(it) * 7919u;
    SolveReport mrep = solve_multistart(mp.bp, mo);
    const auto xm = polish_master(inst, mp, plans, cfg, mrep.point, mo.seed + 1);
    rec.master_seconds = seconds_since(tm);
    rec.master_feasible_starts = mrep.feasible_starts;
    prev_master = xm;

    RegulatorDecision reg = extract_regulator(inst, mp, xm);
    UtilityDecision live_util = extract_utility(inst, mp.live, xm);
    MarketOutcome live_market = extract_market(inst, mp.live.ll, xm);
    double lb = utility_objective(inst, reg, live_util, live_market);

    auto ts = std::chrono::steady_clock::now();
    SubproblemModel sp = build_subproblem(inst, reg, cfg);
    {
      std::vector<double> w(static_cast<std::size_t>(sp.bp.num_cols()), 0.0);
      fill_response(inst, sp.blk, live_util, live_market, w);
      sp.bp.warm_starts.push_back(std::move(w));
    }
    MultistartOptions so = cfg.subproblem;
    so.seed = cfg.subproblem.seed + static_cast<std::uint64_t>(it) * 104729u;
    SolveReport srep = solve_multistart(sp.bp, so);
    rec.subproblem_seconds = seconds_since(ts);
    rec.subproblem_feasible_starts = srep.feasible_starts;
    rec.master_cols = mp.bp.num_cols();
    rec.master_rows = mp.bp.num_rows();
    rec.subproblem_cols = sp.bp.num_cols();
    rec.subproblem_rows = sp.bp.num_rows();
    UtilityDecision sp_util = extract_utility(inst, sp.blk, srep.point);
    MarketOutcome sp_market = extract_market(inst, sp.blk.ll, srep.point);
    double ub = srep.best_objective;

    rec.lower_bound = lb;
    rec.upper_bound = ub;
    rec.gap = ccg_gap(ub, lb);
    rec.reg = reg;
    rec.regulator_objective = regulator_objective(inst, reg, live_util, live_market);
    res.log.push_back(rec);
    if (cfg.on_iterate) cfg.on_iterate(rec);

    res.iterations = it;
    res.lower_bound = lb;
    res.upper_bound = ub;
    res.gap = rec.gap;
    res.reg = reg;
    res.util = live_util;
    res.market = live_market;
    res.regulator_objective = rec.regulator_objective;
    res.utility_objective = lb;
    res.plans = plans;
    res.master_point = xm;

    if (rec.gap <= cfg.eps) {
      res.converged = true;
      res.status = "converged";
      break;
    }
    // A repeated regulator decision adds no new plan information.
    if (it > 1 && same_decision(reg, res.log[res.log.size() - 2].reg)) {
      res.status = "stalled";
      break;
    }
    if (cfg.time_limit_seconds > 0 && seconds_since(t0) > cfg.time_limit_seconds) {
      res.status = "time_limit";
      break;
    }
    plans.push_back(sp_util);
    history.push_back({reg, sp_util, sp_market});
  }
  if (res.status.empty()) res.status = "max_iter";
  res.seconds = seconds_since(t0);
  return res;
}

}  // namespace rpsopt
