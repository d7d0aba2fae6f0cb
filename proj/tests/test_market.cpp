#include <cmath>

#include "doctest.h"
#include "rpsopt/market.hpp"
#include "support.hpp"

using namespace rpsopt;

namespace {

MarketInput desk2_input(const ValidatedInstance& inst, double flex) {
  MarketInput in;
  in.day = 0;
  in.offers.assign(static_cast<std::size_t>(inst.num_generators()), std::vector<double>(4, 0.0));
  for (int t = 0; t < 4; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    in.offers[0][ut] = 120;  // gas1
    in.offers[1][ut] = 10;   // wind1
    in.offers[3][ut] = nonstrategic_offer(inst, 3, 0, t);
    in.offers[4][ut] = nonstrategic_offer(inst, 4, 0, t);
  }
  in.demand.assign(1, std::vector<double>(4, flex));
  return in;
}

}  // namespace

TEST_CASE("congested two-node prices") {
  auto inst = testing::load_fixture("desk2.json");
  auto dm = solve_day_market(inst, desk2_input(inst, 80));
  REQUIRE(dm.status == LpStatus::Optimal);
  for (std::size_t t = 0; t < 4; ++t) {
    // import capped at 60, gas1 sets the price at n1 and coal2 at n2
    CHECK(std::abs(dm.f[0][t]) == doctest::Approx(60));
    CHECK(dm.g[1][t] == doctest::Approx(10));
    CHECK(dm.g[0][t] == doctest::Approx(10));
    CHECK(dm.g[4][t] == doctest::Approx(0));
    CHECK(dm.lambda[0][t] == doctest::Approx(35));
    CHECK(dm.lambda[1][t] == doctest::Approx(20));
  }
  CHECK(dm.primal_objective == doctest::Approx(dm.dual_objective).epsilon(1e-9));
}

TEST_CASE("nodal price is the marginal cost of demand") {
  auto inst = testing::load_fixture("desk2.json");
  auto base = solve_day_market(inst, desk2_input(inst, 80));
  auto bumped = solve_day_market(inst, desk2_input(inst, 81));
  REQUIRE(base.status == LpStatus::Optimal);
  REQUIRE(bumped.status == LpStatus::Optimal);
  // four periods each take one more MW at n1
  double per_mw = (base.primal_objective - bumped.primal_objective) / 4.0;
  CHECK(per_mw == doctest::Approx(base.lambda[0][0]));
}

TEST_CASE("primal and explicit dual programs agree") {
  auto inst = testing::load_fixture("desk2.json");
  auto in = desk2_input(inst, 70);
  auto p = solve_lp(build_ll_primal(inst, in).lp);
  auto d = solve_lp(build_ll_dual(inst, in).lp);
  REQUIRE(p.optimal());
  REQUIRE(d.optimal());
  CHECK(std::abs(strong_duality_gap(p, d)) <= 1e-7 * (1 + std::abs(p.objective)));
}

TEST_CASE("single node clears at the cheap unit") {
  auto inst = testing::load_fixture("desk1.json");
  UtilityDecision u;
  u.capacity.assign(2, 0.0);
  u.offers = {DayPeriod{{150, 150}}, DayPeriod{{100, 100}}};
  u.demand = {DayPeriod{{80, 120}}};
  u.interface_flow = {DayPeriod{{0, 0}}};
  auto m = solve_market(inst, u);
  CHECK(m.lmp[0][0][0] == doctest::Approx(30));
  CHECK(m.lmp[0][0][1] == doctest::Approx(30));
  CHECK(m.dispatch[0][0][1] == doctest::Approx(120));
  CHECK(market_primal_objective(inst, m, 0) == doctest::Approx(market_dual_objective(inst, u, m, 0)));
}

TEST_CASE("shortfall makes the market infeasible") {
  auto inst = testing::load_fixture("desk1.json");
  UtilityDecision u;
  u.capacity.assign(2, 0.0);
  u.offers = {DayPeriod{{10, 10}}, DayPeriod{{10, 10}}};
  u.demand = {DayPeriod{{80, 120}}};
  u.interface_flow = {DayPeriod{{0, 0}}};
  CHECK_THROWS(solve_market(inst, u));
}
