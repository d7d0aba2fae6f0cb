#include <cmath>

#include "doctest.h"
#include "rpsopt/ccg.hpp"
#include "rpsopt/market.hpp"
#include "support.hpp"

using namespace rpsopt;

namespace {

RegulatorDecision flat(double pi) {
  RegulatorDecision r;
  r.pi_on = {pi};
  r.pi_off = {pi};
  return r;
}

CcgConfig small_config() {
  CcgConfig cfg;
  cfg.master.starts = 10;
  cfg.subproblem.starts = 10;
  cfg.max_iter = 10;
  return cfg;
}

}  // namespace

TEST_CASE("relative gap") {
  CHECK(ccg_gap(10, 9) == doctest::Approx(0.1));
  CHECK(ccg_gap(0.5, 0.0) == doctest::Approx(0.5));
  CHECK(ccg_gap(-200, -202) == doctest::Approx(0.01));
}

TEST_CASE("no profitable withholding at a cost-reflective tariff") {
  auto inst = testing::load_fixture("desk1.json");
  auto sp = build_subproblem(inst, flat(30), small_config());
  auto rep = solve_multistart(sp.bp, small_config().subproblem);
  REQUIRE(rep.feasible);
  CHECK(rep.best_objective == doctest::Approx(0).epsilon(1e-6));
  auto u = extract_utility(inst, sp.blk, rep.point);
  auto m = extract_market(inst, sp.blk.ll, rep.point);
  CHECK(utility_objective(inst, flat(30), u, m) == doctest::Approx(rep.best_objective).epsilon(1e-6));
}

TEST_CASE("retail margin above cost is profit") {
  auto inst = testing::load_fixture("desk1.json");
  auto sp = build_subproblem(inst, flat(40), small_config());
  auto rep = solve_multistart(sp.bp, small_config().subproblem);
  REQUIRE(rep.feasible);
  // second hour: demand (50 - 40) / 0.25 = 40 MW bought at 30
  CHECK(rep.best_objective >= 400 - 1e-6);
}

TEST_CASE("master grows one block and one cut per plan") {
  auto inst = testing::load_fixture("desk2.json");
  auto cfg = small_config();
  auto m0 = build_master(inst, {}, cfg);
  CHECK(m0.aux.empty());
  CHECK(m0.cut_rows.empty());
  CHECK(m0.adequacy_row >= 0);
  CHECK_NOTHROW(m0.bp.check_blocks());

  auto sp = build_subproblem(inst, flat(30), cfg);
  auto rep = solve_multistart(sp.bp, cfg.subproblem);
  REQUIRE(rep.feasible);
  auto plan = extract_utility(inst, sp.blk, rep.point);
  auto m1 = build_master(inst, {plan, plan}, cfg);
  CHECK(m1.aux.size() == 2);
  CHECK(m1.cut_rows.size() == 2);
  CHECK(m1.bp.num_cols() > m0.bp.num_cols());
  CHECK_NOTHROW(m1.bp.check_blocks());
}

TEST_CASE("completed master points satisfy every row") {
  auto inst = testing::load_fixture("desk1.json");
  auto cfg = small_config();
  auto mp = build_master(inst, {}, cfg);
  auto x = complete_master_point(inst, mp, {}, flat(30), cfg, 7);
  REQUIRE_FALSE(x.empty());
  CHECK(mp.bp.max_violation(x) <= 1e-6);
  auto reg = extract_regulator(inst, mp, x);
  CHECK(reg.pi_on[0] == doctest::Approx(30));
}

TEST_CASE("single-node instance reaches the break-even tariff") {
  auto inst = testing::load_fixture("desk1.json");
  auto res = run_ccg(inst, small_config());
  CHECK(res.converged);
  CHECK(res.gap <= 1e-3);
  CHECK(res.regulator_objective == doctest::Approx(6000).epsilon(0.01));
  CHECK(res.lower_bound <= res.upper_bound + 1e-6 * std::max(1.0, std::abs(res.upper_bound)));
  CHECK(res.log.size() == static_cast<std::size_t>(res.iterations));
}
