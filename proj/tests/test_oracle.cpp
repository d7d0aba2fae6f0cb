#include "doctest.h"
#include "rpsopt/oracle.hpp"
#include "support.hpp"

using namespace rpsopt;

TEST_CASE("grid best response at the break-even tariff") {
  auto inst = testing::load_fixture("desk1.json");
  RegulatorDecision r;
  r.pi_on = {30};
  r.pi_off = {30};
  auto resp = best_utility_response(inst, r);
  CHECK(resp.objective == doctest::Approx(0).epsilon(1e-7));
  CHECK(resp.plans_evaluated > 0);
  CHECK(utility_objective(inst, r, resp.util, resp.market) == doctest::Approx(resp.objective));
}

TEST_CASE("one-point grid evaluates exactly that decision") {
  auto inst = testing::load_fixture("desk1.json");
  GridSpec g;
  g.pi_on_values = {30};
  g.pi_off_values = {30};
  g.tau_e_values = {0};
  g.tau_c_values = {0};
  g.refine_levels = 0;
  auto res = grid_search_trilevel(inst, g);
  CHECK(res.stats.regulator_points == 1);
  CHECK(res.reg.pi_on[0] == doctest::Approx(30));
  CHECK(res.regulator_objective == doctest::Approx(6000));
}

TEST_CASE("refined search finds the cheapest adequate tariff") {
  auto inst = testing::load_fixture("desk1.json");
  auto res = grid_search_trilevel(inst);
  CHECK(res.regulator_objective == doctest::Approx(6000).epsilon(1e-3));
  CHECK(res.stats.feasible > 0);
  CHECK(res.stats.feasible <= res.stats.regulator_points);
}

TEST_CASE("tariffs below cost leave no adequate response") {
  auto inst = testing::load_fixture("desk1.json");
  GridSpec g;
  g.pi_on_values = {10};
  g.pi_off_values = {10};
  g.tau_e_values = {0};
  g.tau_c_values = {0};
  g.refine_levels = 0;
  CHECK_THROWS_AS(grid_search_trilevel(inst, g), OracleInfeasible);
}
