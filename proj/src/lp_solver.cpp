#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpsopt/lp.hpp"

namespace rpsopt {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

int LpProblem::add_column(const std::string& name, double lb, double ub, double cost) {
  int j = num_cols();
  col_names_.push_back(name);
  cost_.push_back(cost);
  lb_.push_back(lb);
  ub_.push_back(ub);
  col_index_.emplace(name, j);
  return j;
}

int LpProblem::add_row(const std::string& name, RowType type, double rhs, std::vector<int> idx,
                       std::vector<double> val) {
  if (idx.size() != val.size()) throw std::invalid_argument("add_row: index/value size mismatch in " + name);
  int i = num_rows();
  rows_.push_back(LpRow{name, type, rhs, std::move(idx), std::move(val)});
  row_index_.emplace(name, i);
  return i;
}

void LpProblem::add_coef(int row, int col, double v) {
  auto& r = rows_[static_cast<std::size_t>(row)];
  r.idx.push_back(col);
  r.val.push_back(v);
}

void LpProblem::set_bounds(int j, double lb, double ub) {
  lb_[static_cast<std::size_t>(j)] = lb;
  ub_[static_cast<std::size_t>(j)] = ub;
}

int LpProblem::find_column(const std::string& name) const {
  auto it = col_index_.find(name);
  return it == col_index_.end() ? -1 : it->second;
}

int LpProblem::find_row(const std::string& name) const {
  auto it = row_index_.find(name);
  return it == row_index_.end() ? -1 : it->second;
}

void LpProblem::validate() const {
  if (col_index_.size() != col_names_.size()) throw std::invalid_argument("LP column names are not unique");
  if (row_index_.size() != rows_.size()) throw std::invalid_argument("LP row names are not unique");
  for (int j = 0; j < num_cols(); ++j) {
    double l = lower(j), u = upper(j);
    if (std::isnan(l) || std::isnan(u) || l > u || l == kInf || u == -kInf)
      throw std::invalid_argument("LP column " + col_name(j) + " has invalid bounds");
    if (!std::isfinite(cost(j))) throw std::invalid_argument("LP column " + col_name(j) + " has a non-finite cost");
  }
  for (const auto& r : rows_) {
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("LP row " + r.name + " has a non-finite rhs");
    for (std::size_t k = 0; k < r.idx.size(); ++k) {
      if (r.idx[k] < 0 || r.idx[k] >= num_cols()) throw std::invalid_argument("LP row " + r.name + " references a missing column");
      if (!std::isfinite(r.val[k])) throw std::invalid_argument("LP row " + r.name + " has a non-finite coefficient");
    }
  }
}

double LpProblem::row_activity(int i, const std::vector<double>& x) const {
  const auto& r = rows_[static_cast<std::size_t>(i)];
  double s = 0.0;
  for (std::size_t k = 0; k < r.idx.size(); ++k) s += r.val[k] * x[static_cast<std::size_t>(r.idx[k])];
  return s;
}

double LpProblem::objective_value(const std::vector<double>& x) const {
  double s = objective_offset;
  for (int j = 0; j < num_cols(); ++j) s += cost(j) * x[static_cast<std::size_t>(j)];
  return s;
}

double primal_infeasibility(const LpProblem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < p.num_cols(); ++j) {
    double v = x[static_cast<std::size_t>(j)];
    if (v < p.lower(j)) worst = std::max(worst, (p.lower(j) - v) / (1 + std::abs(p.lower(j))));
    if (v > p.upper(j)) worst = std::max(worst, (v - p.upper(j)) / (1 + std::abs(p.upper(j))));
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    const auto& r = p.row(i);
    double a = p.row_activity(i, x);
    double viol = 0.0;
    if (r.type != RowType::Ge) viol = std::max(viol, a - r.rhs);
    if (r.type != RowType::Le) viol = std::max(viol, r.rhs - a);
    worst = std::max(worst, viol / (1 + std::abs(r.rhs)));
  }
  return worst;
}

namespace {

// Bounded revised simplex on  A x - s + sigma*a = 0  with bounds on x, s, a.
class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) {}

  LpSolution run();

 private:
  enum class State : char { Basic, Lower, Upper, Zero };

  struct Entry {
    int row;
    double val;
  };

  const LpProblem& p_;
  LpOptions opt_;
  int m_ = 0, n_ = 0, ntot_ = 0;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lb_, ub_, cost_, x_;
  std::vector<State> state_;
  std::vector<int> basis_;     // basis position -> variable
  std::vector<int> position_;  // variable -> basis position or -1
  std::vector<double> binv_;   // m x m, row-major
  std::vector<double> y_, d_, alpha_;
  std::vector<int> nz_;
  std::vector<double> work_b_, work_inv_;
  // y_ is kept current across pivots for the cost vector it was computed from
  bool y_valid_ = false;
  const std::vector<double>* y_cost_ = nullptr;
  std::vector<char> artificial_;
  long iterations_ = 0;
  int since_refactor_ = 0;
  int degenerate_run_ = 0;

  double& binv(int r, int c) { return binv_[static_cast<std::size_t>(r) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)]; }

  void build();
  void refactor();
  void compute_basic_values();
  void compute_duals(const std::vector<double>& c);
  void column_direction(int q);
  // Returns: 0 optimal, 1 unbounded, -1 continue
  int iterate(const std::vector<double>& c);
  void pivot(int q, int pos, double step, int dir);
  double infeasibility_sum() const;
};

void Simplex::build() {
  m_ = p_.num_rows();
  n_ = p_.num_cols();
  cols_.assign(static_cast<std::size_t>(n_ + 2 * m_), {});
  // merge duplicates per row
  for (int i = 0; i < m_; ++i) {
    const auto& r = p_.row(i);
    std::vector<std::pair<int, double>> merged;
    merged.reserve(r.idx.size());
    for (std::size_t k = 0; k < r.idx.size(); ++k) merged.push_back({r.idx[k], r.val[k]});
    std::sort(merged.begin(), merged.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < merged.size();) {
      int j = merged[k].first;
      double v = 0.0;
      for (; k < merged.size() && merged[k].first == j; ++k) v += merged[k].second;
      if (v != 0.0) cols_[static_cast<std::size_t>(j)].push_back({i, v});
    }
  }
  lb_.resize(static_cast<std::size_t>(n_ + m_));
  ub_.resize(static_cast<std::size_t>(n_ + m_));
  for (int j = 0; j < n_; ++j) {
    lb_[static_cast<std::size_t>(j)] = p_.lower(j);
    ub_[static_cast<std::size_t>(j)] = p_.upper(j);
  }
  for (int i = 0; i < m_; ++i) {
    const auto& r = p_.row(i);
    auto k = static_cast<std::size_t>(n_ + i);
    lb_[k] = r.type == RowType::Le ? -kInf : r.rhs;
    ub_[k] = r.type == RowType::Ge ? kInf : r.rhs;
    cols_[k].push_back({i, -1.0});
  }

  // nonbasic structurals at the bound closest to zero
  x_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
  state_.assign(static_cast<std::size_t>(n_ + m_), State::Zero);
  for (int j = 0; j < n_; ++j) {
    auto uj = static_cast<std::size_t>(j);
    double l = lb_[uj], u = ub_[uj];
    if (std::isfinite(l) && (!std::isfinite(u) || std::abs(l) <= std::abs(u))) {
      x_[uj] = l;
      state_[uj] = State::Lower;
    } else if (std::isfinite(u)) {
      x_[uj] = u;
      state_[uj] = State::Upper;
    }
  }
  std::vector<double> act(static_cast<std::size_t>(m_), 0.0);
  for (int j = 0; j < n_; ++j)
    for (const auto& en : cols_[static_cast<std::size_t>(j)]) act[static_cast<std::size_t>(en.row)] += en.val * x_[static_cast<std::size_t>(j)];

  basis_.assign(static_cast<std::size_t>(m_), -1);
  artificial_.assign(static_cast<std::size_t>(n_ + m_), 0);
  for (int i = 0; i < m_; ++i) {
    auto s = static_cast<std::size_t>(n_ + i);
    double a = act[static_cast<std::size_t>(i)];
    double tol = opt_.primal_tol * (1 + std::abs(a));
    if (a >= lb_[s] - tol && a <= ub_[s] + tol) {
      x_[s] = a;
      state_[s] = State::Basic;
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    } else {
      double b = a < lb_[s] ? lb_[s] : ub_[s];
      x_[s] = b;
      state_[s] = (lb_[s] == ub_[s] || a < lb_[s]) ? State::Lower : State::Upper;
      // artificial column sigma*e_i with value |b - a|
      int k = static_cast<int>(lb_.size());
      double sigma = b - a > 0 ? 1.0 : -1.0;
      cols_[static_cast<std::size_t>(k)].push_back({i, sigma});
      lb_.push_back(0.0);
      ub_.push_back(kInf);
      x_.push_back(std::abs(b - a));
      state_.push_back(State::Basic);
      artificial_.push_back(1);
      basis_[static_cast<std::size_t>(i)] = k;
    }
  }
  ntot_ = static_cast<int>(lb_.size());
  cols_.resize(static_cast<std::size_t>(ntot_));
  position_.assign(static_cast<std::size_t>(ntot_), -1);
  for (int i = 0; i < m_; ++i) position_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = i;

  binv_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);
  for (int i = 0; i < m_; ++i) {
    const auto& col = cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
    binv(i, i) = 1.0 / col[0].val;
  }
  cost_.assign(static_cast<std::size_t>(ntot_), 0.0);
  y_.assign(static_cast<std::size_t>(m_), 0.0);
  d_.assign(static_cast<std::size_t>(ntot_), 0.0);
  alpha_.assign(static_cast<std::size_t>(m_), 0.0);
}

void Simplex::refactor() {
  // Gauss-Jordan inversion of the basis matrix with partial pivoting.
  const auto M = static_cast<std::size_t>(m_);
  auto& b = work_b_;
  b.assign(M * M, 0.0);
  for (std::size_t pcol = 0; pcol < M; ++pcol)
    for (const auto& en : cols_[static_cast<std::size_t>(basis_[pcol])]) b[static_cast<std::size_t>(en.row) * M + pcol] = en.val;
  auto& inv = work_inv_;
  inv.assign(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i) inv[i * M + i] = 1.0;
  double max_piv = 0.0, min_piv = kInf;
  std::vector<std::size_t> nz_b, nz_inv;
  for (std::size_t c = 0; c < M; ++c) {
    std::size_t best = c;
    double bv = std::abs(b[c * M + c]);
    for (std::size_t r = c + 1; r < M; ++r)
      if (std::abs(b[r * M + c]) > bv) {
        bv = std::abs(b[r * M + c]);
        best = r;
      }
    if (bv < 1e-13) {
      std::ostringstream os;
      os << "singular basis during refactorisation (column " << c << " of " << M << ", pivot " << bv << ")";
      throw LpNumericalError(os.str(), kInf);
    }
    max_piv = std::max(max_piv, bv);
    min_piv = std::min(min_piv, bv);
    if (best != c) {
      for (std::size_t k = 0; k < M; ++k) {
        std::swap(b[c * M + k], b[best * M + k]);
        std::swap(inv[c * M + k], inv[best * M + k]);
      }
    }
    double piv = b[c * M + c];
    // Only the nonzeros of the pivot row take part in the elimination.
    nz_b.clear();
    nz_inv.clear();
    for (std::size_t k = c; k < M; ++k)
      if (b[c * M + k] != 0.0) {
        b[c * M + k] /= piv;
        nz_b.push_back(k);
      }
    for (std::size_t k = 0; k < M; ++k)
      if (inv[c * M + k] != 0.0) {
        inv[c * M + k] /= piv;
        nz_inv.push_back(k);
      }
    for (std::size_t r = 0; r < M; ++r) {
      if (r == c) continue;
      double f = b[r * M + c];
      if (f == 0.0) continue;
      for (std::size_t k : nz_b) b[r * M + k] -= f * b[c * M + k];
      for (std::size_t k : nz_inv) inv[r * M + k] -= f * inv[c * M + k];
    }
  }
  // inv is B^{-1} with rows indexed by basis position (row permutation already folded in)
  binv_.swap(inv);
  since_refactor_ = 0;
  y_valid_ = false;
  compute_basic_values();
}

void Simplex::compute_basic_values() {
  // B x_B = -N x_N
  std::vector<double> rhs(static_cast<std::size_t>(m_), 0.0);
  for (int j = 0; j < ntot_; ++j) {
    if (state_[static_cast<std::size_t>(j)] == State::Basic) continue;
    double v = x_[static_cast<std::size_t>(j)];
    if (v == 0.0) continue;
    for (const auto& en : cols_[static_cast<std::size_t>(j)]) rhs[static_cast<std::size_t>(en.row)] -= en.val * v;
  }
  for (int pos = 0; pos < m_; ++pos) {
    double s = 0.0;
    for (int r = 0; r < m_; ++r) s += binv(pos, r) * rhs[static_cast<std::size_t>(r)];
    x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(pos)])] = s;
  }
}

void Simplex::compute_duals(const std::vector<double>& c) {
  if (!y_valid_ || y_cost_ != &c) {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (int pos = 0; pos < m_; ++pos) {
      double cb = c[static_cast<std::size_t>(basis_[static_cast<std::size_t>(pos)])];
      if (cb == 0.0) continue;
      for (int r = 0; r < m_; ++r) y_[static_cast<std::size_t>(r)] += cb * binv(pos, r);
    }
    y_valid_ = true;
    y_cost_ = &c;
  }
  for (int j = 0; j < ntot_; ++j) {
    double s = c[static_cast<std::size_t>(j)];
    for (const auto& en : cols_[static_cast<std::size_t>(j)]) s -= y_[static_cast<std::size_t>(en.row)] * en.val;
    d_[static_cast<std::size_t>(j)] = state_[static_cast<std::size_t>(j)] == State::Basic ? 0.0 : s;
  }
}

void Simplex::column_direction(int q) {
  std::fill(alpha_.begin(), alpha_.end(), 0.0);
  for (const auto& en : cols_[static_cast<std::size_t>(q)])
    for (int pos = 0; pos < m_; ++pos) alpha_[static_cast<std::size_t>(pos)] += binv(pos, en.row) * en.val;
}

void Simplex::pivot(int q, int pos, double step, int dir) {
  // move entering variable and basics along the edge
  x_[static_cast<std::size_t>(q)] += dir * step;
  for (int k = 0; k < m_; ++k) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])] -= dir * step * alpha_[static_cast<std::size_t>(k)];
  if (pos < 0) {
    // bound flip
    state_[static_cast<std::size_t>(q)] = dir > 0 ? State::Upper : State::Lower;
    x_[static_cast<std::size_t>(q)] = dir > 0 ? ub_[static_cast<std::size_t>(q)] : lb_[static_cast<std::size_t>(q)];
    return;
  }
  int leave = basis_[static_cast<std::size_t>(pos)];
  auto ul = static_cast<std::size_t>(leave);
  // leaving variable goes to the bound it reached
  double delta = -dir * alpha_[static_cast<std::size_t>(pos)];
  if (lb_[ul] == ub_[ul]) {
    state_[ul] = State::Lower;
    x_[ul] = lb_[ul];
  } else if (delta < 0) {
    state_[ul] = State::Lower;
    x_[ul] = lb_[ul];
  } else {
    state_[ul] = State::Upper;
    x_[ul] = ub_[ul];
  }
  position_[ul] = -1;
  basis_[static_cast<std::size_t>(pos)] = q;
  position_[static_cast<std::size_t>(q)] = pos;
  state_[static_cast<std::size_t>(q)] = State::Basic;

  double ap = alpha_[static_cast<std::size_t>(pos)];
  const double dq = d_[static_cast<std::size_t>(q)];
  nz_.clear();
  for (int c = 0; c < m_; ++c)
    if (binv(pos, c) != 0.0) {
      binv(pos, c) /= ap;
      nz_.push_back(c);
    }
  for (int r = 0; r < m_; ++r) {
    if (r == pos) continue;
    double f = alpha_[static_cast<std::size_t>(r)];
    if (f == 0.0) continue;
    for (int c : nz_) binv(r, c) -= f * binv(pos, c);
  }
  if (y_valid_)
    for (int c : nz_) y_[static_cast<std::size_t>(c)] += dq * binv(pos, c);
  ++since_refactor_;
}

int Simplex::iterate(const std::vector<double>& c) {
  compute_duals(c);
  const bool bland = degenerate_run_ >= opt_.degenerate_limit;
  int q = -1, dir = 0;
  double best = 0.0;
  for (int j = 0; j < ntot_; ++j) {
    auto uj = static_cast<std::size_t>(j);
    if (state_[uj] == State::Basic || lb_[uj] == ub_[uj]) continue;
    double dj = d_[uj];
    double tol = opt_.dual_tol * (1 + std::abs(c[uj]));
    int cand = 0;
    if (dj < -tol && x_[uj] < ub_[uj]) cand = 1;
    else if (dj > tol && x_[uj] > lb_[uj]) cand = -1;
    if (cand == 0) continue;
    if (bland) {
      q = j;
      dir = cand;
      break;
    }
    if (std::abs(dj) > best) {
      best = std::abs(dj);
      q = j;
      dir = cand;
    }
  }
  if (q < 0) return 0;

  column_direction(q);
  auto uq = static_cast<std::size_t>(q);
  double range = ub_[uq] - lb_[uq];
  double amax = 0.0;
  for (double a : alpha_) amax = std::max(amax, std::abs(a));
  double ptol = opt_.pivot_tol * std::max(1.0, amax);

  // Harris two-pass ratio test (plain minimum ratio with index ties under Bland)
  int pos = -1;
  double step = kInf;
  if (!bland) {
    double relaxed = kInf;
    for (int k = 0; k < m_; ++k) {
      double delta = -dir * alpha_[static_cast<std::size_t>(k)];
      if (std::abs(delta) <= ptol) continue;
      auto v = static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)]);
      double tol = opt_.primal_tol * (1 + std::abs(x_[v]));
      if (delta < 0 && std::isfinite(lb_[v])) relaxed = std::min(relaxed, (x_[v] - lb_[v] + tol) / -delta);
      if (delta > 0 && std::isfinite(ub_[v])) relaxed = std::min(relaxed, (ub_[v] - x_[v] + tol) / delta);
    }
    if (range <= relaxed && std::isfinite(range)) {
      step = range;
    } else if (std::isfinite(relaxed)) {
      double big = 0.0;
      for (int k = 0; k < m_; ++k) {
        double delta = -dir * alpha_[static_cast<std::size_t>(k)];
        if (std::abs(delta) <= ptol) continue;
        auto v = static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)]);
        double ratio = kInf;
        if (delta < 0 && std::isfinite(lb_[v])) ratio = (x_[v] - lb_[v]) / -delta;
        if (delta > 0 && std::isfinite(ub_[v])) ratio = (ub_[v] - x_[v]) / delta;
        if (ratio <= relaxed && std::abs(delta) > big) {
          big = std::abs(delta);
          pos = k;
          step = std::max(ratio, 0.0);
        }
      }
    }
  } else {
    int best_var = -1;
    for (int k = 0; k < m_; ++k) {
      double delta = -dir * alpha_[static_cast<std::size_t>(k)];
      if (std::abs(delta) <= ptol) continue;
      int var = basis_[static_cast<std::size_t>(k)];
      auto v = static_cast<std::size_t>(var);
      double ratio = kInf;
      if (delta < 0 && std::isfinite(lb_[v])) ratio = std::max(0.0, (x_[v] - lb_[v]) / -delta);
      if (delta > 0 && std::isfinite(ub_[v])) ratio = std::max(0.0, (ub_[v] - x_[v]) / delta);
      if (!std::isfinite(ratio)) continue;
      if (ratio < step - 1e-12 || (ratio <= step + 1e-12 && (best_var < 0 || var < best_var))) {
        step = ratio;
        pos = k;
        best_var = var;
      }
    }
    if (std::isfinite(range) && range <= step) {
      step = range;
      pos = -1;
    }
  }
  if (!std::isfinite(step)) return 1;

  degenerate_run_ = step <= 1e-12 ? degenerate_run_ + 1 : 0;
  pivot(q, pos, step, dir);
  ++iterations_;
  if (since_refactor_ >= opt_.refactor_every) refactor();
  return -1;
}

double Simplex::infeasibility_sum() const {
  double s = 0.0;
  for (int j = 0; j < ntot_; ++j)
    if (artificial_[static_cast<std::size_t>(j)]) s += x_[static_cast<std::size_t>(j)];
  return s;
}

LpSolution Simplex::run() {
  p_.validate();
  build();
  LpSolution sol;
  long limit = opt_.max_iterations > 0 ? opt_.max_iterations : 100000L + 50L * (m_ + n_);
  double scale = 1.0;
  for (const auto& r : p_.rows()) scale = std::max(scale, std::abs(r.rhs));
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(p_.lower(j))) scale = std::max(scale, std::abs(p_.lower(j)));
    if (std::isfinite(p_.upper(j))) scale = std::max(scale, std::abs(p_.upper(j)));
  }

  auto run_phase = [&](const std::vector<double>& c) -> int {
    bool fresh = false;
    y_valid_ = false;
    while (true) {
      if (iterations_ > limit) throw LpNumericalError("simplex iteration limit reached", 0.0);
      int r = iterate(c);
      if (r == 0) {
        if (fresh || since_refactor_ == 0) return 0;
        refactor();
        fresh = true;
        continue;
      }
      fresh = false;
      if (r == 1) return 1;
    }
  };

  bool has_art = false;
  for (int j = 0; j < ntot_; ++j) has_art = has_art || artificial_[static_cast<std::size_t>(j)];
  if (has_art) {
    std::vector<double> c1(static_cast<std::size_t>(ntot_), 0.0);
    for (int j = 0; j < ntot_; ++j)
      if (artificial_[static_cast<std::size_t>(j)]) c1[static_cast<std::size_t>(j)] = 1.0;
    run_phase(c1);
    if (infeasibility_sum() > 1e-7 * scale) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    // freeze artificials at zero and drive basic ones out where possible
    for (int j = 0; j < ntot_; ++j) {
      auto uj = static_cast<std::size_t>(j);
      if (!artificial_[uj]) continue;
      ub_[uj] = 0.0;
      if (state_[uj] != State::Basic) {
        x_[uj] = 0.0;
        state_[uj] = State::Lower;
      }
    }
    for (int pos = 0; pos < m_; ++pos) {
      int a = basis_[static_cast<std::size_t>(pos)];
      if (!artificial_[static_cast<std::size_t>(a)]) continue;
      int best = -1;
      double bestv = 1e-7;
      for (int j = 0; j < ntot_; ++j) {
        auto uj = static_cast<std::size_t>(j);
        if (state_[uj] == State::Basic || artificial_[uj]) continue;
        double v = 0.0;
        for (const auto& en : cols_[uj]) v += binv(pos, en.row) * en.val;
        if (std::abs(v) > bestv) {
          bestv = std::abs(v);
          best = j;
        }
      }
      if (best < 0) continue;
      y_valid_ = false;
      column_direction(best);
      pivot(best, pos, 0.0, 1);
    }
    refactor();
  }

  cost_.assign(static_cast<std::size_t>(ntot_), 0.0);
  double sgn = p_.sense == Sense::Maximize ? -1.0 : 1.0;
  for (int j = 0; j < n_; ++j) cost_[static_cast<std::size_t>(j)] = sgn * p_.cost(j);
  degenerate_run_ = 0;
  int r = run_phase(cost_);
  sol.iterations = iterations_;
  if (r == 1) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  compute_duals(cost_);

  sol.status = LpStatus::Optimal;
  sol.x.assign(x_.begin(), x_.begin() + n_);
  // clean tiny bound violations introduced by the Harris tolerance
  for (int j = 0; j < n_; ++j) {
    auto uj = static_cast<std::size_t>(j);
    sol.x[uj] = std::clamp(sol.x[uj], lb_[uj], ub_[uj]);
  }
  if (primal_infeasibility(p_, sol.x) > 1e-6) {
    std::ostringstream os;
    os << "simplex finished with primal infeasibility " << primal_infeasibility(p_, sol.x);
    throw LpNumericalError(os.str(), 0.0);
  }
  sol.duals.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) sol.duals[static_cast<std::size_t>(i)] = sgn * y_[static_cast<std::size_t>(i)];
  sol.reduced_costs.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) sol.reduced_costs[static_cast<std::size_t>(j)] = sgn * d_[static_cast<std::size_t>(j)];
  sol.objective = p_.objective_value(sol.x);
  return sol;
}

}  // namespace

LpSolution solve_lp(const LpProblem& p, const LpOptions& opt) {
  Simplex s(p, opt);
  return s.run();
}

}  // namespace rpsopt
