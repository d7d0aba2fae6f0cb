#include "rpsopt/bilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <queue>
#include <random>
#include <thread>

namespace rpsopt {

// ---------------------------------------------------------------- Expr

Expr& Expr::add(int col, double coef) {
  if (coef != 0.0) linear[col] += coef;
  return *this;
}

Expr& Expr::add_constant(double c) {
  constant += c;
  return *this;
}

Expr& Expr::add_product(int a, int b, double coef) {
  if (coef != 0.0) products[{std::min(a, b), std::max(a, b)}] += coef;
  return *this;
}

Expr& Expr::add_affine_product(const Expr& u, const Expr& v, double coef) {
  if (!u.is_affine() || !v.is_affine()) throw std::invalid_argument("add_affine_product: operands must be affine");
  constant += coef * u.constant * v.constant;
  for (const auto& [j, c] : u.linear) add(j, coef * c * v.constant);
  for (const auto& [j, c] : v.linear) add(j, coef * c * u.constant);
  for (const auto& [i, ci] : u.linear)
    for (const auto& [j, cj] : v.linear) add_product(i, j, coef * ci * cj);
  return *this;
}

Expr& Expr::add_expr(const Expr& o, double coef) {
  constant += coef * o.constant;
  for (const auto& [j, c] : o.linear) add(j, coef * c);
  for (const auto& [k, c] : o.products) add_product(k.first, k.second, coef * c);
  return *this;
}

double Expr::evaluate(const std::vector<double>& x) const {
  double s = constant;
  for (const auto& [j, c] : linear) s += c * x[static_cast<std::size_t>(j)];
  for (const auto& [k, c] : products) s += c * x[static_cast<std::size_t>(k.first)] * x[static_cast<std::size_t>(k.second)];
  return s;
}

double ConvexTerm::value(const std::vector<double>& x) const {
  if (kind == Kind::Square) {
    double v = x[static_cast<std::size_t>(var)];
    return coef * v * v;
  }
  double s = constant;
  for (const auto& [j, w] : weights) {
    double t = w * x[static_cast<std::size_t>(j)];
    s += t * t;
  }
  return coef * std::sqrt(std::max(s, 0.0));
}

// ---------------------------------------------------------------- program

int BilinearProgram::add_column(const std::string& name, double lb, double ub, Block b, double cost) {
  block.push_back(b);
  return linear.add_column(name, lb, ub, cost);
}

void BilinearProgram::set_objective(Sense sense, const Expr& e) {
  linear.sense = sense;
  for (int j = 0; j < linear.num_cols(); ++j) linear.set_cost(j, 0.0);
  objective_terms.clear();
  linear.objective_offset = e.constant;
  for (const auto& [j, c] : e.linear) linear.set_cost(j, linear.cost(j) + c);
  for (const auto& [k, c] : e.products) {
    if (k.first == k.second) throw std::invalid_argument("set_objective: squared terms are not supported in the objective");
    objective_terms.push_back({k.first, k.second, c});
  }
}

int BilinearProgram::add_row(const std::string& name, RowType type, double rhs, const Expr& e) {
  bool has_square = false;
  for (const auto& [k, c] : e.products) has_square |= (k.first == k.second);
  double sign = 1.0;
  if (has_square) {
    // Convex squares must end up positive on the left of a <= row.
    if (type == RowType::Eq) throw std::invalid_argument("row " + name + ": squares need an inequality");
    if (type == RowType::Ge) {
      sign = -1.0;
      type = RowType::Le;
      rhs = -rhs;
    }
  }
  int r = linear.add_row(name, type, rhs - sign * e.constant);
  for (const auto& [j, c] : e.linear) linear.add_coef(r, j, sign * c);
  for (const auto& [k, c] : e.products) {
    double v = sign * c;
    if (k.first == k.second) {
      if (v < 0) throw std::invalid_argument("row " + name + ": concave square term");
      ConvexTerm t;
      t.kind = ConvexTerm::Kind::Square;
      t.row = r;
      t.coef = v;
      t.var = k.first;
      convex_terms.push_back(t);
    } else {
      row_terms.push_back({r, BilinearTerm{k.first, k.second, v}});
    }
  }
  return r;
}

void BilinearProgram::add_norm_term(int row, double coef, double constant, std::vector<std::pair<int, double>> weights) {
  if (linear.row(row).type != RowType::Le) throw std::invalid_argument("norm terms need a <= row");
  if (coef < 0) throw std::invalid_argument("norm terms need a non-negative coefficient");
  ConvexTerm t;
  t.kind = ConvexTerm::Kind::Norm;
  t.row = row;
  t.coef = coef;
  t.constant = constant;
  t.weights = std::move(weights);
  convex_terms.push_back(std::move(t));
}

double BilinearProgram::objective(const std::vector<double>& x) const {
  double s = linear.objective_value(x);
  for (const auto& t : objective_terms) s += t.coef * x[static_cast<std::size_t>(t.a)] * x[static_cast<std::size_t>(t.b)];
  return s;
}

double BilinearProgram::row_lhs(int row, const std::vector<double>& x) const {
  double s = linear.row_activity(row, x);
  for (const auto& [r, t] : row_terms)
    if (r == row) s += t.coef * x[static_cast<std::size_t>(t.a)] * x[static_cast<std::size_t>(t.b)];
  for (const auto& c : convex_terms)
    if (c.row == row) s += c.value(x);
  return s;
}

std::vector<double> BilinearProgram::row_violations(const std::vector<double>& x) const {
  std::vector<double> lhs(static_cast<std::size_t>(num_rows()));
  for (int i = 0; i < num_rows(); ++i) lhs[static_cast<std::size_t>(i)] = linear.row_activity(i, x);
  for (const auto& [r, t] : row_terms)
    lhs[static_cast<std::size_t>(r)] += t.coef * x[static_cast<std::size_t>(t.a)] * x[static_cast<std::size_t>(t.b)];
  for (const auto& c : convex_terms) lhs[static_cast<std::size_t>(c.row)] += c.value(x);
  std::vector<double> v(lhs.size(), 0.0);
  for (int i = 0; i < num_rows(); ++i) {
    const auto& r = linear.row(i);
    double d = lhs[static_cast<std::size_t>(i)] - r.rhs;
    double viol = 0.0;
    if (r.type == RowType::Le) viol = std::max(d, 0.0);
    else if (r.type == RowType::Ge) viol = std::max(-d, 0.0);
    else viol = std::abs(d);
    v[static_cast<std::size_t>(i)] = viol / (1.0 + std::abs(r.rhs));
  }
  return v;
}

double BilinearProgram::max_violation(const std::vector<double>& x) const {
  double m = 0.0;
  for (double v : row_violations(x)) m = std::max(m, v);
  for (int j = 0; j < num_cols(); ++j) {
    double xj = x[static_cast<std::size_t>(j)];
    double l = linear.lower(j), u = linear.upper(j);
    if (xj < l) m = std::max(m, (l - xj) / (1.0 + std::abs(l)));
    if (xj > u) m = std::max(m, (xj - u) / (1.0 + std::abs(u)));
  }
  return m;
}

void BilinearProgram::check_blocks() const {
  if (static_cast<int>(block.size()) != num_cols()) throw std::invalid_argument("block assignment size mismatch");
  auto check = [&](const BilinearTerm& t) {
    Block a = block[static_cast<std::size_t>(t.a)], b = block[static_cast<std::size_t>(t.b)];
    bool ok = (a == Block::A && b == Block::B) || (a == Block::B && b == Block::A);
    if (!ok)
      throw std::invalid_argument("product " + linear.col_name(t.a) + " * " + linear.col_name(t.b) +
                                  " does not span blocks A and B");
  };
  for (const auto& t : objective_terms) check(t);
  for (const auto& [r, t] : row_terms) check(t);
}

// ---------------------------------------------------------------- block step

namespace {

bool better(Sense s, double a, double b, double tol) {
  // a strictly better than b
  double scale = std::max(1.0, std::abs(b));
  return s == Sense::Maximize ? a > b + tol * scale : a < b - tol * scale;
}

double improvement(Sense s, double now, double before) { return s == Sense::Maximize ? now - before : before - now; }

struct StepResult {
  bool ok = false;
  std::vector<double> x;
};

// Solves the LP over the free block (and shared columns) with the other block fixed at x.
// Convex terms touching free columns are outer-approximated with cuts refined to tolerance.
StepResult block_step(const BilinearProgram& bp, const std::vector<double>& x, Block free_block, bool elastic,
                      double rho) {
  const int n = bp.num_cols();
  const int m = bp.num_rows();
  auto is_free = [&](int j) {
    Block b = bp.block[static_cast<std::size_t>(j)];
    return b == free_block || b == Block::Shared;
  };
  auto xv = [&](int j) { return x[static_cast<std::size_t>(j)]; };

  LpProblem lp;
  lp.sense = bp.linear.sense;
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  std::vector<int> back;
  double offset = bp.linear.objective_offset;
  for (int j = 0; j < n; ++j) {
    if (is_free(j)) {
      map[static_cast<std::size_t>(j)] = lp.add_column(bp.linear.col_name(j), bp.linear.lower(j), bp.linear.upper(j),
                                                       bp.linear.cost(j));
      back.push_back(j);
    } else {
      offset += bp.linear.cost(j) * xv(j);
    }
  }
  for (const auto& t : bp.objective_terms) {
    int fa = map[static_cast<std::size_t>(t.a)], fb = map[static_cast<std::size_t>(t.b)];
    if (fa >= 0) lp.set_cost(fa, lp.cost(fa) + t.coef * xv(t.b));
    else if (fb >= 0) lp.set_cost(fb, lp.cost(fb) + t.coef * xv(t.a));
    else offset += t.coef * xv(t.a) * xv(t.b);
  }

  // Row content in reduced space.
  std::vector<std::map<int, double>> coefs(static_cast<std::size_t>(m));
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& r = bp.linear.row(i);
    rhs[static_cast<std::size_t>(i)] = r.rhs;
    for (std::size_t k = 0; k < r.idx.size(); ++k) {
      int j = r.idx[k];
      int f = map[static_cast<std::size_t>(j)];
      if (f >= 0) coefs[static_cast<std::size_t>(i)][f] += r.val[k];
      else rhs[static_cast<std::size_t>(i)] -= r.val[k] * xv(j);
    }
  }
  for (const auto& [row, t] : bp.row_terms) {
    int fa = map[static_cast<std::size_t>(t.a)], fb = map[static_cast<std::size_t>(t.b)];
    auto& c = coefs[static_cast<std::size_t>(row)];
    if (fa >= 0) c[fa] += t.coef * xv(t.b);
    else if (fb >= 0) c[fb] += t.coef * xv(t.a);
    else rhs[static_cast<std::size_t>(row)] -= t.coef * xv(t.a) * xv(t.b);
  }
  // Convex terms: constants when fully fixed, otherwise an auxiliary column.
  struct Aux {
    int term;
    int col;
  };
  std::vector<Aux> aux;
  for (int k = 0; k < static_cast<int>(bp.convex_terms.size()); ++k) {
    const auto& c = bp.convex_terms[static_cast<std::size_t>(k)];
    bool touches = false;
    if (c.kind == ConvexTerm::Kind::Square) touches = map[static_cast<std::size_t>(c.var)] >= 0;
    else
      for (const auto& [j, w] : c.weights) touches |= (map[static_cast<std::size_t>(j)] >= 0 && w != 0.0);
    if (!touches) {
      rhs[static_cast<std::size_t>(c.row)] -= c.value(x);
      continue;
    }
    int s = lp.add_column("conv#" + std::to_string(k), 0.0, kInf, 0.0);
    coefs[static_cast<std::size_t>(c.row)][s] += 1.0;  // s stands for coef * term
    aux.push_back({k, s});
  }

  std::vector<int> kept_rows;
  for (int i = 0; i < m; ++i) {
    auto& c = coefs[static_cast<std::size_t>(i)];
    bool any = false;
    for (const auto& [j, v] : c) any |= (v != 0.0);
    if (!any) continue;
    std::vector<int> idx;
    std::vector<double> val;
    for (const auto& [j, v] : c)
      if (v != 0.0) {
        idx.push_back(j);
        val.push_back(v);
      }
    const auto& r = bp.linear.row(i);
    int lr = lp.add_row(r.name, r.type, rhs[static_cast<std::size_t>(i)], std::move(idx), std::move(val));
    if (elastic) {
      double pen = lp.sense == Sense::Maximize ? -rho : rho;
      if (r.type != RowType::Ge) lp.add_coef(lr, lp.add_column("el-#" + std::to_string(i), 0.0, kInf, pen), -1.0);
      if (r.type != RowType::Le) lp.add_coef(lr, lp.add_column("el+#" + std::to_string(i), 0.0, kInf, pen), 1.0);
    }
    kept_rows.push_back(i);
  }
  lp.objective_offset = offset;

  // Tangent cut of a convex term at the point y (full space); s >= coef * (value(y) + grad . (x - y)).
  int cut_count = 0;
  auto add_cut = [&](const Aux& a, const std::vector<double>& y) {
    const auto& c = bp.convex_terms[static_cast<std::size_t>(a.term)];
    std::vector<int> idx{a.col};
    std::vector<double> val{1.0};
    double r = 0.0;
    if (c.kind == ConvexTerm::Kind::Square) {
      double y0 = y[static_cast<std::size_t>(c.var)];
      idx.push_back(map[static_cast<std::size_t>(c.var)]);
      val.push_back(-2.0 * c.coef * y0);
      r = -c.coef * y0 * y0;
    } else {
      double f = c.constant;
      for (const auto& [j, w] : c.weights) f += w * w * y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
      f = std::sqrt(std::max(f, 0.0));
      if (f <= 1e-12) {
        lp.add_row("cut#" + std::to_string(cut_count++), RowType::Ge, 0.0, idx, val);
        return;
      }
      r = c.coef * c.constant / f;
      for (const auto& [j, w] : c.weights) {
        double g = c.coef * w * w * y[static_cast<std::size_t>(j)] / f;
        int fj = map[static_cast<std::size_t>(j)];
        if (fj >= 0) {
          idx.push_back(fj);
          val.push_back(-g);
        } else {
          r += g * y[static_cast<std::size_t>(j)];
        }
      }
    }
    lp.add_row("cut#" + std::to_string(cut_count++), RowType::Ge, r, std::move(idx), std::move(val));
  };
  for (const auto& a : aux) add_cut(a, x);

  StepResult out;
  std::vector<double> prev_y;
  for (int round = 0; round < 80; ++round) {
    LpSolution sol;
    try {
      sol = solve_lp(lp);
    } catch (const LpNumericalError&) {
      return out;
    }
    if (!sol.optimal()) return out;
    std::vector<double> y = x;
    for (std::size_t k = 0; k < back.size(); ++k) y[static_cast<std::size_t>(back[k])] = sol.x[k];
    bool refined = false;
    double worst = 0.0;
    for (const auto& a : aux) {
      double truth = bp.convex_terms[static_cast<std::size_t>(a.term)].value(y);
      double s = sol.x[static_cast<std::size_t>(a.col)];
      double excess = (truth - s) / (1.0 + std::abs(truth));
      worst = std::max(worst, excess);
      if (excess > 1e-9) {
        add_cut(a, y);
        refined = true;
      }
    }
    // A repeated point means the new cuts sit inside the LP tolerance.
    bool stalled = refined && y == prev_y && worst <= 1e-7;
    prev_y = y;
    if (!refined || stalled) {
      // Clamp round-off against the column bounds.
      for (int j : back) {
        auto& v = y[static_cast<std::size_t>(j)];
        v = std::clamp(v, bp.linear.lower(j), bp.linear.upper(j));
      }
      out.ok = true;
      out.x = std::move(y);
      return out;
    }
  }
  return out;
}

std::vector<double> clamp_to_bounds(const BilinearProgram& bp, std::vector<double> x) {
  for (int j = 0; j < bp.num_cols(); ++j) {
    auto& v = x[static_cast<std::size_t>(j)];
    double l = bp.linear.lower(j), u = bp.linear.upper(j);
    if (std::isnan(v)) v = std::isfinite(l) ? l : (std::isfinite(u) ? u : 0.0);
    v = std::clamp(v, l, u);
  }
  return x;
}

// Elastic alternation with growing penalty until the point is feasible.
std::optional<std::vector<double>> elastic_phase(const BilinearProgram& bp, std::vector<double> x,
                                                 const MultistartOptions& opt) {
  double rho = 1e3;
  for (int k = 0; k < 8; ++k, rho *= 10.0) {
    double prev = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 30; ++round) {
      for (Block b : {Block::B, Block::A}) {
        auto r = block_step(bp, x, b, true, rho);
        if (r.ok) x = std::move(r.x);
      }
      double viol = bp.max_violation(x);
      if (viol <= opt.feasibility_tol) return x;
      if (prev - viol < 1e-10) break;
      prev = viol;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<double>> alternate_from(const BilinearProgram& bp, std::vector<double> start,
                                                  const MultistartOptions& opt, std::vector<double>* trajectory) {
  std::vector<double> x = clamp_to_bounds(bp, std::move(start));
  if (bp.max_violation(x) > opt.feasibility_tol) {
    auto fixed = elastic_phase(bp, x, opt);
    if (!fixed) return std::nullopt;
    x = std::move(*fixed);
  }
  const Sense sense = bp.linear.sense;
  double obj = bp.objective(x);
  if (trajectory) trajectory->push_back(obj);
  for (int round = 0; round < opt.max_rounds; ++round) {
    double before = obj;
    for (Block b : {Block::B, Block::A}) {
      auto r = block_step(bp, x, b, false, 0.0);
      if (!r.ok) r = block_step(bp, x, b, true, 1e9);
      if (!r.ok || bp.max_violation(r.x) > opt.feasibility_tol) continue;
      double v = bp.objective(r.x);
      if (improvement(sense, v, obj) >= -1e-9 * std::max(1.0, std::abs(obj))) {
        x = std::move(r.x);
        obj = v;
      }
    }
    if (trajectory) trajectory->push_back(obj);
    if (improvement(sense, obj, before) <= opt.improvement_tol * std::max(1.0, std::abs(before))) break;
  }
  return x;
}

std::optional<std::vector<double>> solve_convex(const BilinearProgram& bp, const std::vector<double>& near) {
  if (bp.num_bilinear_terms() > 0) throw std::invalid_argument("solve_convex: program has products");
  BilinearProgram all = bp;
  all.block.assign(static_cast<std::size_t>(bp.num_cols()), Block::Shared);
  auto r = block_step(all, clamp_to_bounds(bp, near), Block::Shared, false, 0.0);
  if (!r.ok) return std::nullopt;
  return r.x;
}

// ---------------------------------------------------------------- multistart

namespace {

std::vector<double> sample_point(const BilinearProgram& bp, std::mt19937_64& rng) {
  std::vector<double> x(static_cast<std::size_t>(bp.num_cols()), 0.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int j = 0; j < bp.num_cols(); ++j) {
    double l = bp.linear.lower(j), u = bp.linear.upper(j);
    double v = 0.0;
    if (std::isfinite(l) && std::isfinite(u)) v = l + (u - l) * U(rng);
    else if (std::isfinite(l)) v = l;
    else if (std::isfinite(u)) v = u;
    x[static_cast<std::size_t>(j)] = v;
  }
  return x;
}

std::vector<double> corner_point(const BilinearProgram& bp, double frac) {
  std::vector<double> x(static_cast<std::size_t>(bp.num_cols()), 0.0);
  for (int j = 0; j < bp.num_cols(); ++j) {
    double l = bp.linear.lower(j), u = bp.linear.upper(j);
    double v = 0.0;
    if (std::isfinite(l) && std::isfinite(u)) v = l + (u - l) * frac;
    else if (std::isfinite(l)) v = l;
    else if (std::isfinite(u)) v = u;
    x[static_cast<std::size_t>(j)] = v;
  }
  return x;
}

// true when a should replace b among equally good points
bool tie_prefers(const BilinearProgram& bp, const std::vector<double>& a, const std::vector<double>& b) {
  for (int j : bp.tie_break_columns) {
    double va = a[static_cast<std::size_t>(j)], vb = b[static_cast<std::size_t>(j)];
    double tol = 1e-9 * std::max(1.0, std::abs(vb));
    if (va < vb - tol) return true;
    if (va > vb + tol) return false;
  }
  return false;
}

}  // namespace

SolveReport solve_multistart(const BilinearProgram& bp, const MultistartOptions& opt) {
  bp.check_blocks();
  bp.linear.validate();

  struct Start {
    std::vector<double> x;
  };
  std::vector<Start> starts;
  for (const auto& w : bp.warm_starts) starts.push_back({w});
  for (double frac : {0.0, 1.0, 0.5}) starts.push_back({corner_point(bp, frac)});
  for (int k = 0; k < opt.starts; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    starts.push_back({sample_point(bp, rng)});
  }

  const std::size_t S = starts.size();
  std::vector<std::optional<std::vector<double>>> results(S);
  std::vector<std::vector<double>> traj(S);
  std::vector<std::vector<double>> attempted(S);

  auto run = [&](std::size_t k) {
    std::vector<double> x = starts[k].x;
    if (bp.repair && bp.max_violation(clamp_to_bounds(bp, x)) > opt.feasibility_tol) {
      try {
        if (auto r = bp.repair(x)) x = std::move(*r);
      } catch (const std::exception&) {
      }
    }
    attempted[k] = clamp_to_bounds(bp, x);
    try {
      results[k] = alternate_from(bp, x, opt, opt.keep_trajectories ? &traj[k] : nullptr);
    } catch (const std::exception&) {
      results[k].reset();
    }
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw <= 1 || S < 2) {
    for (std::size_t k = 0; k < S; ++k) run(k);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(hw, S); ++t)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t k;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= S) return;
            k = next++;
          }
          run(k);
        }
      });
    for (auto& th : pool) th.join();
  }

  SolveReport rep;
  for (std::size_t k = 0; k < S; ++k) {
    if (opt.keep_trajectories) rep.trajectories.push_back(traj[k]);
    if (!results[k]) continue;
    const auto& x = *results[k];
    ++rep.feasible_starts;
    double v = bp.objective(x);
    if (!rep.feasible || better(bp.linear.sense, v, rep.best_objective, 1e-9) ||
        (!better(bp.linear.sense, rep.best_objective, v, 1e-9) && tie_prefers(bp, x, rep.point))) {
      rep.feasible = true;
      rep.best_objective = v;
      rep.point = x;
    }
  }
  if (!rep.feasible) {
    // Report the rows violated at the least-violating attempted point.
    std::size_t best = 0;
    double bv = kInf;
    for (std::size_t k = 0; k < S; ++k) {
      double v = bp.max_violation(attempted[k]);
      if (v < bv) {
        bv = v;
        best = k;
      }
    }
    std::vector<std::pair<std::string, double>> res;
    if (S > 0) {
      auto viol = bp.row_violations(attempted[best]);
      for (int i = 0; i < bp.num_rows(); ++i)
        if (viol[static_cast<std::size_t>(i)] > opt.feasibility_tol)
          res.emplace_back(bp.linear.row(i).name, viol[static_cast<std::size_t>(i)]);
      std::sort(res.begin(), res.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      if (res.size() > 20) res.resize(20);
    }
    throw BilinearInfeasible("no start reached a feasible point (" + std::to_string(S) + " starts)", std::move(res));
  }
  return rep;
}

// ---------------------------------------------------------------- McCormick

McCormickRelaxation mccormick_relax(const BilinearProgram& bp, const std::vector<double>* lower,
                                    const std::vector<double>* upper) {
  McCormickRelaxation out;
  out.lp = bp.linear;
  LpProblem& lp = out.lp;
  auto lo = [&](int j) { return lower ? (*lower)[static_cast<std::size_t>(j)] : bp.linear.lower(j); };
  auto hi = [&](int j) { return upper ? (*upper)[static_cast<std::size_t>(j)] : bp.linear.upper(j); };
  for (int j = 0; j < lp.num_cols(); ++j) lp.set_bounds(j, lo(j), hi(j));
  auto need_finite = [&](int j) {
    if (!std::isfinite(lo(j)) || !std::isfinite(hi(j)))
      throw std::invalid_argument("mccormick_relax: column " + bp.linear.col_name(j) + " is unbounded");
  };

  std::map<std::pair<int, int>, int> wcol;
  auto product_col = [&](int a, int b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = wcol.find(key);
    if (it != wcol.end()) return it->second;
    need_finite(a);
    need_finite(b);
    double la = lo(a), ua = hi(a), lb = lo(b), ub = hi(b);
    double c[4] = {la * lb, la * ub, ua * lb, ua * ub};
    double wl = *std::min_element(c, c + 4), wu = *std::max_element(c, c + 4);
    std::string nm = "w[" + bp.linear.col_name(a) + "*" + bp.linear.col_name(b) + "]";
    int w = lp.add_column(nm, wl, wu, 0.0);
    // w >= la b + lb a - la lb ; w >= ua b + ub a - ua ub
    lp.add_row(nm + "#1", RowType::Ge, -la * lb, {w, b, a}, {1.0, -la, -lb});
    lp.add_row(nm + "#2", RowType::Ge, -ua * ub, {w, b, a}, {1.0, -ua, -ub});
    // w <= ua b + lb a - ua lb ; w <= la b + ub a - la ub
    lp.add_row(nm + "#3", RowType::Le, -ua * lb, {w, b, a}, {1.0, -ua, -lb});
    lp.add_row(nm + "#4", RowType::Le, -la * ub, {w, b, a}, {1.0, -la, -ub});
    wcol.emplace(key, w);
    out.products.push_back({key.first, key.second, w});
    return w;
  };
  for (const auto& t : bp.objective_terms) {
    int w = product_col(t.a, t.b);
    lp.set_cost(w, lp.cost(w) + t.coef);
  }
  for (const auto& [r, t] : bp.row_terms) lp.add_coef(r, product_col(t.a, t.b), t.coef);

  for (int k = 0; k < static_cast<int>(bp.convex_terms.size()); ++k) {
    const auto& c = bp.convex_terms[static_cast<std::size_t>(k)];
    int s = lp.add_column("conv#" + std::to_string(k), 0.0, kInf, 0.0);
    lp.add_coef(c.row, s, 1.0);
    out.convex_aux.emplace_back(k, s);
    if (c.kind == ConvexTerm::Kind::Square) {
      need_finite(c.var);
      double l = lo(c.var), u = hi(c.var);
      for (double y : {l, 0.5 * (l + u), u}) {
        lp.add_row("sq#" + std::to_string(k) + "#" + std::to_string(lp.num_rows()), RowType::Ge, -c.coef * y * y,
                   {s, c.var}, {1.0, -2.0 * c.coef * y});
      }
    } else {
      // s >= coef * sqrt(K) and s >= coef * |w_j| * |x_j| ; tangent at the box midpoint.
      if (c.constant > 0)
        lp.add_row("nrm#" + std::to_string(k) + "#k", RowType::Ge, c.coef * std::sqrt(c.constant), {s}, {1.0});
      double f = c.constant;
      std::vector<double> mid;
      for (const auto& [j, w] : c.weights) {
        double m = std::isfinite(lo(j)) && std::isfinite(hi(j)) ? 0.5 * (lo(j) + hi(j)) : 0.0;
        mid.push_back(m);
        f += w * w * m * m;
        lp.add_row("nrm#" + std::to_string(k) + "#" + std::to_string(j) + "+", RowType::Ge, 0.0, {s, j},
                   {1.0, -c.coef * std::abs(w)});
        lp.add_row("nrm#" + std::to_string(k) + "#" + std::to_string(j) + "-", RowType::Ge, 0.0, {s, j},
                   {1.0, c.coef * std::abs(w)});
      }
      f = std::sqrt(f);
      if (f > 1e-12) {
        std::vector<int> idx{s};
        std::vector<double> val{1.0};
        for (std::size_t q = 0; q < c.weights.size(); ++q) {
          idx.push_back(c.weights[q].first);
          val.push_back(-c.coef * c.weights[q].second * c.weights[q].second * mid[q] / f);
        }
        lp.add_row("nrm#" + std::to_string(k) + "#mid", RowType::Ge, c.coef * c.constant / f, std::move(idx),
                   std::move(val));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- spatial branch and bound

namespace {

struct NodeBound {
  bool feasible = false;
  double bound = 0.0;
  std::vector<double> x;  // relaxation solution, original columns first
};

NodeBound bound_node(const BilinearProgram& bp, const std::vector<double>& lo, const std::vector<double>& hi,
                     McCormickRelaxation* keep = nullptr) {
  McCormickRelaxation rel = mccormick_relax(bp, &lo, &hi);
  NodeBound nb;
  for (int round = 0; round < 40; ++round) {
    LpSolution sol;
    try {
      sol = solve_lp(rel.lp);
    } catch (const LpNumericalError&) {
      return nb;
    }
    if (sol.status == LpStatus::Unbounded) throw std::invalid_argument("relaxation is unbounded; bound every column");
    if (!sol.optimal()) return nb;
    nb.feasible = true;
    nb.bound = sol.objective;
    nb.x = sol.x;
    bool refined = false;
    for (const auto& [k, s] : rel.convex_aux) {
      const auto& c = bp.convex_terms[static_cast<std::size_t>(k)];
      double truth = c.value(sol.x);
      if (truth <= sol.x[static_cast<std::size_t>(s)] + 1e-9 * (1.0 + truth)) continue;
      refined = true;
      if (c.kind == ConvexTerm::Kind::Square) {
        double y = sol.x[static_cast<std::size_t>(c.var)];
        rel.lp.add_row("sqk#" + std::to_string(rel.lp.num_rows()), RowType::Ge, -c.coef * y * y, {s, c.var},
                       {1.0, -2.0 * c.coef * y});
      } else {
        double f = truth / c.coef;
        std::vector<int> idx{s};
        std::vector<double> val{1.0};
        for (const auto& [j, w] : c.weights) {
          idx.push_back(j);
          val.push_back(-c.coef * w * w * sol.x[static_cast<std::size_t>(j)] / f);
        }
        rel.lp.add_row("nrmk#" + std::to_string(rel.lp.num_rows()), RowType::Ge, c.coef * c.constant / f,
                       std::move(idx), std::move(val));
      }
    }
    if (!refined) break;
  }
  if (keep) *keep = std::move(rel);
  return nb;
}

}  // namespace

SolveReport spatial_branch_and_bound(const BilinearProgram& bp, const BranchAndBoundOptions& opt) {
  bp.check_blocks();
  const Sense sense = bp.linear.sense;
  const int n = bp.num_cols();
  SolveReport rep;

  // Incumbent from local search.
  try {
    rep = solve_multistart(bp, opt.local);
  } catch (const BilinearInfeasible&) {
    rep = SolveReport{};
  }
  rep.trajectories.clear();

  std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    lo[static_cast<std::size_t>(j)] = bp.linear.lower(j);
    hi[static_cast<std::size_t>(j)] = bp.linear.upper(j);
  }

  struct Node {
    double bound;
    std::vector<double> lo, hi;
  };
  // Best bound first: max problems pop the largest bound.
  auto cmp = [sense](const Node& a, const Node& b) {
    return sense == Sense::Maximize ? a.bound < b.bound : a.bound > b.bound;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

  auto closes = [&](double bound) {
    if (!rep.feasible) return false;
    double gap = improvement(sense, bound, rep.best_objective);
    return gap <= opt.rel_gap * std::max(1.0, std::abs(rep.best_objective));
  };

  auto try_point = [&](std::vector<double> x) {
    x.resize(static_cast<std::size_t>(n));
    auto cand = alternate_from(bp, x, opt.local);
    for (const auto& p : {std::optional<std::vector<double>>(clamp_to_bounds(bp, x)), cand}) {
      if (!p || bp.max_violation(*p) > opt.local.feasibility_tol) continue;
      double v = bp.objective(*p);
      if (!rep.feasible || better(sense, v, rep.best_objective, 1e-12)) {
        rep.feasible = true;
        rep.best_objective = v;
        rep.point = *p;
      }
    }
  };

  NodeBound root = bound_node(bp, lo, hi);
  if (!root.feasible) {
    rep.has_bound = true;
    rep.relaxation_bound = sense == Sense::Maximize ? -kInf : kInf;
    rep.certified_gap = 0.0;
    return rep;
  }
  try_point(root.x);
  open.push({root.bound, lo, hi});
  double global = root.bound;
  long processed = 0;

  while (!open.empty()) {
    Node node = open.top();
    global = node.bound;
    if (closes(node.bound)) break;
    if (processed >= opt.node_budget) {
      rep.gap_flagged = true;
      break;
    }
    open.pop();
    McCormickRelaxation rel;
    NodeBound nb = bound_node(bp, node.lo, node.hi, &rel);
    if (!nb.feasible || closes(nb.bound)) continue;
    try_point(nb.x);
    if (closes(nb.bound)) continue;

    // Branch on the factor of the worst-approximated product.
    int var = -1;
    double worst = -1.0;
    for (const auto& p : rel.products) {
      double xa = nb.x[static_cast<std::size_t>(p.a)], xb = nb.x[static_cast<std::size_t>(p.b)];
      double err = std::abs(nb.x[static_cast<std::size_t>(p.w)] - xa * xb);
      if (err > worst) {
        worst = err;
        double wa = (node.hi[static_cast<std::size_t>(p.a)] - node.lo[static_cast<std::size_t>(p.a)]) /
                    std::max(1e-12, hi[static_cast<std::size_t>(p.a)] - lo[static_cast<std::size_t>(p.a)]);
        double wb = (node.hi[static_cast<std::size_t>(p.b)] - node.lo[static_cast<std::size_t>(p.b)]) /
                    std::max(1e-12, hi[static_cast<std::size_t>(p.b)] - lo[static_cast<std::size_t>(p.b)]);
        var = wa >= wb ? p.a : p.b;
      }
    }
    if (var < 0 || worst <= 1e-12) {
      // Envelopes exact: the remaining gap is round-off in the convex cuts.
      continue;
    }
    ++processed;
    double mid = 0.5 * (node.lo[static_cast<std::size_t>(var)] + node.hi[static_cast<std::size_t>(var)]);
    Node left{nb.bound, node.lo, node.hi}, right{nb.bound, node.lo, node.hi};
    left.hi[static_cast<std::size_t>(var)] = mid;
    right.lo[static_cast<std::size_t>(var)] = mid;
    open.push(std::move(left));
    open.push(std::move(right));
  }
  if (open.empty()) global = rep.feasible ? rep.best_objective : global;
  rep.nodes = processed;
  rep.has_bound = true;
  rep.relaxation_bound = root.bound;
  if (rep.feasible) {
    rep.certified_gap = std::max(0.0, improvement(sense, global, rep.best_objective)) /
                        std::max(1.0, std::abs(rep.best_objective));
  }
  return rep;
}

}  // namespace rpsopt
