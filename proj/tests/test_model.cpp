#include <cmath>

#include "doctest.h"
#include "rpsopt/model.hpp"
#include "support.hpp"

using namespace rpsopt;

TEST_CASE("capital cost prorated to a daily annuity") {
  // annuity over 10 years at 5%, divided by 365, computed by hand
  double expected = 1630000.0 * 0.05 / (1.0 - std::pow(1.05, -10)) / 365.0;
  CHECK(prorate_capital(1630000.0, 10, 0.05) == doctest::Approx(expected));
  CHECK(prorate_capital(1630000.0, 10, 0.05) == doctest::Approx(578.3355).epsilon(1e-6));
  CHECK(prorate_capital(895000.0, 10, 0.05) == doctest::Approx(317.552).epsilon(1e-5));
  CHECK(prorate_capital(3650.0, 10, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS(prorate_capital(1.0, 0, 0.05));
}

TEST_CASE("flexible demand follows the affine response") {
  CHECK(demand_from_tariff(40, 0.25, 30) == doctest::Approx(40));
  CHECK(demand_from_tariff(40, 0.25, 40) == doctest::Approx(0));
  CHECK(demand_from_tariff(40, 0.25, 30, 5) == doctest::Approx(20));
  CHECK_THROWS_AS(demand_from_tariff(40, 0.25, 41), std::domain_error);
  CHECK_THROWS(demand_from_tariff(40, 0.0, 10));
}

TEST_CASE("desk2 indices") {
  auto inst = testing::load_fixture("desk2.json");
  CHECK(inst.num_nodes() == 2);
  CHECK(inst.num_periods() == 4);
  CHECK(inst.num_days() == 1);
  REQUIRE(inst.strategic_nodes().size() == 1);
  CHECK(inst.network().nodes[static_cast<std::size_t>(inst.strategic_nodes()[0])].id == "n1");
  // utility owns every generator in its state
  CHECK(inst.utility_generators().size() == 3);
  CHECK(inst.candidate_renewables().size() == 1);
  CHECK(inst.is_utility_generator(0));
  CHECK_FALSE(inst.is_utility_generator(3));
  CHECK(inst.participation(0, 2) == doctest::Approx(1.0));
  CHECK(inst.tariff_ceiling(inst.strategic_nodes()[0]) == doctest::Approx(0.25 * 80 + 20));
}

TEST_CASE("capacity incentive conversions invert each other") {
  auto inst = testing::load_fixture("desk2.json");
  double daily = inst.capacity_incentive_daily(600.0);
  CHECK(daily == doctest::Approx(prorate_capital(600000.0, 10, 0.05)));
  CHECK(inst.capacity_incentive_per_kw(daily) == doctest::Approx(600.0));
}

TEST_CASE("average tariff weights nodes by consumption") {
  auto inst = testing::load_fixture("desk2.json");
  RegulatorDecision reg{{40.0}, {20.0}, 0.0, 0.0};
  // two on-peak and two off-peak periods at the single strategic node
  CHECK(average_tariff(inst, reg) == doctest::Approx(30.0));
  auto d = flexible_demand(inst, reg);
  CHECK(d[0][0][0] == doctest::Approx((0.25 * 80 + 20 - 20) / 0.25));
  CHECK(d[0][0][1] == doctest::Approx((0.25 * 120 + 20 - 40) / 0.25));
}

TEST_CASE("validation collects every issue") {
  Instance raw = testing::load_fixture("desk2.json").raw();
  raw.policy.rps_fraction = 1.5;
  raw.network.lines[0].reactance = 0.0;
  raw.days.weights = {0.4};
  try {
    validate_instance(raw);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.issues().size() >= 3);
  }
}

TEST_CASE("participation factors must sum to one") {
  Instance raw = testing::load_fixture("desk2.json").raw();
  raw.participation[0] = {0.5, 1, 1, 1};
  CHECK_THROWS_AS(validate_instance(raw), ValidationError);
}

TEST_CASE("regulator and utility objectives by hand") {
  auto inst = testing::load_fixture("desk1.json");
  RegulatorDecision reg{{30.0}, {30.0}, 0.0, 0.0};
  UtilityDecision u;
  u.capacity.assign(2, 0.0);
  u.demand = flexible_demand(inst, reg);
  u.offers = {{{150, 150}}, {{100, 100}}};
  u.interface_flow = {{{0, 0}}};
  MarketOutcome m;
  m.dispatch = {{{40, 80}}, {{0, 0}}};
  m.lmp = {{{30, 30}}};
  // consumers pay 30 on 80 + 120 MWh of inflexible demand
  CHECK(regulator_objective(inst, reg, u, m) == doctest::Approx(6000));
  // tariff revenue equals purchase cost, generation margin zero
  CHECK(utility_objective(inst, reg, u, m) == doctest::Approx(0));
}
