#include <cmath>
#include <random>

#include "doctest.h"
#include "rpsopt/stochastic.hpp"
#include "support.hpp"

using namespace rpsopt;

TEST_CASE("normal quantiles") {
  CHECK(inverse_normal_cdf(0.97) == doctest::Approx(1.880793608151251).epsilon(1e-9));
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0));
  CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
  for (double p : {1e-6, 0.01, 0.2, 0.7, 0.999}) CHECK(normal_cdf(inverse_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), std::domain_error);
}

TEST_CASE("aggregate standard deviation") {
  CHECK(aggregate_stdev(0.5, {10, 20}, {0.1, 0.2}) == doctest::Approx(0.5 * std::sqrt(17.0)));
  CHECK(aggregate_stdev(1.0, {}, {}) == doctest::Approx(0.0));
}

TEST_CASE("affine control keeps the system balanced") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 5.0);
  std::vector<double> offers{50, 30, 20, 10};
  std::vector<double> alpha{0.6, 0.4, 0, 0};
  std::vector<char> ren{0, 0, 1, 1};
  double planned = 110;
  for (int k = 0; k < 200; ++k) {
    std::vector<double> err{0, 0, N(rng), N(rng)};
    auto g = realize_affine(offers, alpha, ren, err);
    double sum = 0;
    for (double v : g) sum += v;
    CHECK(std::abs(sum - planned) <= 1e-9 * planned);
  }
}

TEST_CASE("deterministic limits on desk2") {
  auto inst = testing::load_fixture("desk2.json");
  auto cons = deterministic_generation_constraints(inst, 0.03);
  // one controllable, four periods, upper and lower
  REQUIRE(cons.size() == 8);
  const auto& up = cons[0];
  CHECK(up.upper);
  CHECK(up.rhs == doctest::Approx(120));
  CHECK(up.margin == doctest::Approx(inverse_normal_cdf(0.97)));
  std::vector<double> cap(5, 0.0);
  cap[2] = 40;
  double sd = std::sqrt(std::pow(20 * 0.1, 2) + std::pow(40 * 0.1, 2));
  CHECK(up.stdev_norm(cap) == doctest::Approx(sd));
  CHECK(up.residual(100, cap) == doctest::Approx(100 + up.margin * sd - 120));
  const auto& lo = cons[1];
  CHECK_FALSE(lo.upper);
  CHECK(lo.residual(10, cap) == doctest::Approx(-10 + lo.margin * sd));
}

TEST_CASE("Monte Carlo violation rate matches the risk level on a tight limit") {
  auto inst = testing::load_fixture("desk2.json");
  std::vector<double> cap(5, 0.0);
  cap[2] = 40;
  double z = inverse_normal_cdf(0.97);
  double sd = std::sqrt(std::pow(20 * 0.1, 2) + std::pow(40 * 0.1, 2));
  UtilityDecision u;
  u.capacity = cap;
  u.offers.assign(5, DayPeriod(1, std::vector<double>(4, 0.0)));
  for (int t = 0; t < 4; ++t) u.offers[0][0][static_cast<std::size_t>(t)] = t == 1 ? 120 - z * sd : 60;
  auto rep = monte_carlo_validate(inst, u, StochasticConfig::make(0.03, 5, 40000));
  bool seen = false;
  for (const auto& r : rep) {
    if (r.id == "gas1/upper/0/1") {
      seen = true;
      CHECK(r.rate > 0.02);
      CHECK(r.rate < 0.04);
      CHECK(r.ci_low <= 0.03);
      CHECK(r.ci_high >= 0.03);
    } else {
      CHECK(r.rate < 0.001);
    }
  }
  CHECK(seen);
  auto again = monte_carlo_validate(inst, u, StochasticConfig::make(0.03, 5, 40000));
  for (std::size_t k = 0; k < rep.size(); ++k) CHECK(again[k].violations == rep[k].violations);
}

TEST_CASE("Wilson interval brackets the estimate") {
  auto [lo, hi] = wilson_interval(30, 1000, 2.576);
  CHECK(lo < 0.03);
  CHECK(hi > 0.03);
  CHECK(lo > 0.0);
}
