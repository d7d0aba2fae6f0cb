#include <cmath>

#include "doctest.h"
#include "rpsopt/bilinear.hpp"
#include "rpsopt/model.hpp"

using namespace rpsopt;

namespace {

// min x*y over [-1, 2]^2; optimum -2 at the two off-diagonal corners
BilinearProgram saddle() {
  BilinearProgram bp;
  int x = bp.add_column("x", -1, 2, Block::A);
  int y = bp.add_column("y", -1, 2, Block::B);
  Expr e;
  e.add_product(x, y, 1.0);
  bp.set_objective(Sense::Minimize, e);
  return bp;
}

// min x + y s.t. x*y >= 1 over [0.5, 4]^2; optimum 2 at (1, 1)
BilinearProgram hyperbola() {
  BilinearProgram bp;
  int x = bp.add_column("x", 0.5, 4, Block::A);
  int y = bp.add_column("y", 0.5, 4, Block::B);
  Expr o;
  o.add(x, 1).add(y, 1);
  bp.set_objective(Sense::Minimize, o);
  Expr r;
  r.add_product(x, y, 1.0);
  bp.add_row("xy", RowType::Ge, 1.0, r);
  return bp;
}

}  // namespace

TEST_CASE("expressions evaluate products and affine products") {
  Expr u, v;
  u.add(0, 2).add_constant(1);  // 2a + 1
  v.add(1, 3);                  // 3b
  Expr e;
  e.add_affine_product(u, v, 0.5);
  CHECK(e.products.size() == 1);
  std::vector<double> x{2.0, 4.0};
  CHECK(e.evaluate(x) == doctest::Approx(0.5 * 5 * 12));
}

TEST_CASE("products inside one block are rejected") {
  BilinearProgram bp;
  int a = bp.add_column("a", 0, 1, Block::A);
  int b = bp.add_column("b", 0, 1, Block::A);
  Expr e;
  e.add_product(a, b, 1.0);
  bp.set_objective(Sense::Maximize, e);
  CHECK_THROWS_AS(bp.check_blocks(), std::invalid_argument);
}

TEST_CASE("multistart reaches a global corner of a saddle") {
  auto bp = saddle();
  MultistartOptions o;
  o.starts = 20;
  auto rep = solve_multistart(bp, o);
  REQUIRE(rep.feasible);
  CHECK(rep.best_objective == doctest::Approx(-2));
  CHECK(rep.feasible_starts > 0);
  auto again = solve_multistart(bp, o);
  CHECK(again.point == rep.point);
}

TEST_CASE("alternation never worsens the objective") {
  auto bp = saddle();
  std::vector<double> traj;
  auto p = alternate_from(bp, {0.5, 0.5}, MultistartOptions{}, &traj);
  REQUIRE(p);
  for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj[k] <= traj[k - 1] + 1e-9);
}

TEST_CASE("McCormick envelope is exact at box corners") {
  auto bp = saddle();
  auto rel = mccormick_relax(bp);
  REQUIRE(rel.products.size() == 1);
  auto s = solve_lp(rel.lp);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(-2));
}

TEST_CASE("McCormick needs finite bounds") {
  BilinearProgram bp;
  int x = bp.add_column("x", 0, kInf, Block::A);
  int y = bp.add_column("y", 0, 1, Block::B);
  Expr e;
  e.add_product(x, y, 1.0);
  bp.set_objective(Sense::Minimize, e);
  CHECK_THROWS(mccormick_relax(bp));
}

TEST_CASE("branch and bound certifies a bilinear constraint optimum") {
  auto bp = hyperbola();
  BranchAndBoundOptions o;
  o.rel_gap = 1e-4;
  auto rep = spatial_branch_and_bound(bp, o);
  REQUIRE(rep.feasible);
  CHECK(rep.best_objective == doctest::Approx(2).epsilon(1e-3));
  CHECK(rep.has_bound);
  CHECK(rep.relaxation_bound <= rep.best_objective + 1e-9);
  CHECK_FALSE(rep.gap_flagged);
  CHECK(bp.max_violation(rep.point) <= 1e-6);
}

TEST_CASE("outer approximation of a norm constraint") {
  // max x + y s.t. ||(x, y)|| <= 1
  BilinearProgram bp;
  int x = bp.add_column("x", -2, 2, Block::A);
  int y = bp.add_column("y", -2, 2, Block::B);
  Expr o;
  o.add(x, 1).add(y, 1);
  bp.set_objective(Sense::Maximize, o);
  int r = bp.add_row("disk", RowType::Le, 1.0, Expr{});
  bp.add_norm_term(r, 1.0, 0.0, {{x, 1.0}, {y, 1.0}});
  auto p = solve_convex(bp, {0.0, 0.0});
  REQUIRE(p);
  CHECK(bp.objective(*p) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));
  CHECK(bp.max_violation(*p) <= 1e-6);
}
