#include <cmath>
#include <random>

#include "doctest.h"
#include "rpsopt/lp.hpp"

using namespace rpsopt;

TEST_CASE("textbook maximization") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18; optimum (2, 6) = 36
  LpProblem p;
  p.sense = Sense::Maximize;
  int x = p.add_column("x", 0, kInf, 3);
  int y = p.add_column("y", 0, kInf, 5);
  p.add_row("a", RowType::Le, 4, {x}, {1});
  p.add_row("b", RowType::Le, 12, {y}, {2});
  p.add_row("c", RowType::Le, 18, {x, y}, {3, 2});
  auto s = solve_lp(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(36));
  CHECK(s.x[0] == doctest::Approx(2));
  CHECK(s.x[1] == doctest::Approx(6));
  // shadow prices by hand: b -> 1.5, c -> 1
  CHECK(s.duals[0] == doctest::Approx(0));
  CHECK(s.duals[1] == doctest::Approx(1.5));
  CHECK(s.duals[2] == doctest::Approx(1));
}

TEST_CASE("duals equal the objective's rhs sensitivity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.5, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    LpProblem p;
    const int n = 4, m = 3;
    for (int j = 0; j < n; ++j) p.add_column("x" + std::to_string(j), 0, 10, U(rng));
    for (int i = 0; i < m; ++i) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int j = 0; j < n; ++j) {
        idx.push_back(j);
        val.push_back(U(rng));
      }
      p.add_row("r" + std::to_string(i), RowType::Ge, 2 + U(rng), idx, val);
    }
    auto s = solve_lp(p);
    REQUIRE(s.optimal());
    for (int i = 0; i < m; ++i) {
      const double h = 1e-5;
      LpProblem q = p;
      q.row(i).rhs += h;
      auto t = solve_lp(q);
      REQUIRE(t.optimal());
      double fd = (t.objective - s.objective) / h;
      CHECK(s.duals[static_cast<std::size_t>(i)] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("reduced costs of nonbasic columns at bounds") {
  // min x + 2y  s.t. x + y >= 1, 0 <= x, y <= 5: x = 1, y nonbasic with rc 1
  LpProblem p;
  int x = p.add_column("x", 0, 5, 1);
  int y = p.add_column("y", 0, 5, 2);
  p.add_row("cover", RowType::Ge, 1, {x, y}, {1, 1});
  auto s = solve_lp(p);
  REQUIRE(s.optimal());
  CHECK(s.x[1] == doctest::Approx(0));
  CHECK(s.reduced_costs[1] == doctest::Approx(1));
  CHECK(s.duals[0] == doctest::Approx(1));
}

TEST_CASE("equality rows, free columns and negative bounds") {
  LpProblem p;
  int a = p.add_column("a", -kInf, kInf, 0);
  int b = p.add_column("b", -3, 3, 1);
  p.add_row("link", RowType::Eq, 2, {a, b}, {1, -1});
  p.add_row("cap", RowType::Le, 4, {a}, {1});
  auto s = solve_lp(p);
  REQUIRE(s.optimal());
  CHECK(s.x[1] == doctest::Approx(-3));
  CHECK(s.x[0] == doctest::Approx(-1));
  CHECK(s.objective == doctest::Approx(-3));
}

TEST_CASE("infeasible and unbounded programs are reported") {
  LpProblem p;
  int x = p.add_column("x", 0, 1, 1);
  p.add_row("r", RowType::Ge, 2, {x}, {1});
  CHECK(solve_lp(p).status == LpStatus::Infeasible);

  LpProblem q;
  q.sense = Sense::Maximize;
  int y = q.add_column("y", 0, kInf, 1);
  q.add_row("r", RowType::Ge, 1, {y}, {1});
  CHECK(solve_lp(q).status == LpStatus::Unbounded);
}

TEST_CASE("degenerate program terminates") {
  // Classic cycling example (Beale); optimum -0.05 at x1 = 0.04, x3 = 1.
  LpProblem p;
  int x1 = p.add_column("x1", 0, kInf, -0.75);
  int x2 = p.add_column("x2", 0, kInf, 150);
  int x3 = p.add_column("x3", 0, kInf, -0.02);
  int x4 = p.add_column("x4", 0, kInf, 6);
  p.add_row("r1", RowType::Le, 0, {x1, x2, x3, x4}, {0.25, -60, -0.04, 9});
  p.add_row("r2", RowType::Le, 0, {x1, x2, x3, x4}, {0.5, -90, -0.02, 3});
  p.add_row("r3", RowType::Le, 1, {x3}, {1});
  auto s = solve_lp(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(-0.05));
}

TEST_CASE("validation rejects bad programs") {
  LpProblem p;
  p.add_column("x", 1, 0, 0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  LpProblem q;
  q.add_column("x", 0, 1, std::nan(""));
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("format_exact round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 578.33551234, -2.5e-12, 1e300}) CHECK(std::stod(format_exact(v)) == v);
}
