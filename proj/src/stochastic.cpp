#include "rpsopt/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace rpsopt {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: p must lie in (0, 1)");
  // Acklam's rational approximation (relative error ~1e-9), then Newton steps.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double z;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    double q = p - 0.5, r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p == 0.5) return 0.0;
  for (int it = 0; it < 3; ++it) {
    double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
    if (pdf <= 0) break;
    // work on the smaller tail so the residual keeps its precision
    double err = p < 0.5 ? normal_cdf(z) - p : (1.0 - p) - 0.5 * std::erfc(z / std::sqrt(2.0));
    z -= err / pdf;
  }
  return z;
}

double aggregate_stdev(double alpha, const std::vector<double>& caps, const std::vector<double>& sigma) {
  if (caps.size() != sigma.size()) throw std::invalid_argument("aggregate_stdev: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < caps.size(); ++j) s += (caps[j] * sigma[j]) * (caps[j] * sigma[j]);
  return alpha * std::sqrt(s);
}

StochasticConfig StochasticConfig::make(double eta, std::uint64_t seed, long samples) {
  if (!(eta > 0 && eta <= 0.5)) throw std::invalid_argument("eta must lie in (0, 0.5]");
  StochasticConfig c;
  c.eta = eta;
  c.z = eta == 0.5 ? 0.0 : inverse_normal_cdf(1.0 - eta);
  c.seed = seed;
  c.samples = samples;
  return c;
}

double ChanceConstraint::stdev_norm(const std::vector<double>& capacity) const {
  double s = norm_constant;
  for (auto [j, w] : norm_weights) {
    double v = w * capacity[static_cast<std::size_t>(j)];
    s += v * v;
  }
  return std::sqrt(s);
}

double ChanceConstraint::residual(double offer, const std::vector<double>& capacity) const {
  double lhs = offer_coef * offer;
  for (auto [j, c] : capacity_coefs) lhs += c * capacity[static_cast<std::size_t>(j)];
  if (margin != 0.0) lhs += margin * stdev_norm(capacity);
  return lhs - rhs;
}

std::vector<ChanceConstraint> deterministic_generation_constraints(const ValidatedInstance& inst, double eta) {
  const auto& ren = inst.utility_renewables();
  const auto& ctl = inst.utility_controllables();
  if (!ren.empty() && ctl.empty())
    throw std::invalid_argument("strategic state has renewables but no controllable balancing generator");
  double z = eta >= 0.5 ? 0.0 : inverse_normal_cdf(1.0 - eta);

  std::vector<ChanceConstraint> out;
  for (int e = 0; e < inst.num_days(); ++e) {
    for (int t = 0; t < inst.num_periods(); ++t) {
      const auto ue = static_cast<std::size_t>(e);
      const auto ut = static_cast<std::size_t>(t);
      double mean_existing = 0.0, var_existing = 0.0;
      std::vector<std::pair<int, double>> mean_cand, sd_cand;
      for (int j : ren) {
        const auto& g = inst.generator(j);
        double ups = g.error_mean[ue][ut], sig = g.error_sd[ue][ut];
        if (g.is_candidate()) {
          if (ups != 0.0) mean_cand.push_back({j, ups});
          if (sig != 0.0) sd_cand.push_back({j, sig});
        } else {
          mean_existing += g.g_max * ups;
          var_existing += (g.g_max * sig) * (g.g_max * sig);
        }
      }
      for (int i : ctl) {
        const auto& g = inst.generator(i);
        double alpha = inst.participation(i, t);
        for (int upper = 1; upper >= 0; --upper) {
          ChanceConstraint cc;
          cc.gen = i;
          cc.day = e;
          cc.period = t;
          cc.upper = upper == 1;
          cc.id = g.id + (cc.upper ? "/upper/" : "/lower/") + std::to_string(e) + "/" + std::to_string(t);
          double sign = cc.upper ? 1.0 : -1.0;
          cc.offer_coef = sign;
          for (auto [j, ups] : mean_cand) cc.capacity_coefs.push_back({j, -sign * alpha * ups});
          cc.margin = z * alpha;
          cc.norm_constant = var_existing;
          if (cc.margin != 0.0) cc.norm_weights = sd_cand;
          if (g.is_candidate()) {
            cc.capacity_coefs.push_back({i, cc.upper ? -1.0 : g.min_output_factor});
            cc.rhs = sign * alpha * mean_existing;
          } else {
            cc.rhs = (cc.upper ? g.g_max : -g.g_min) + sign * alpha * mean_existing;
          }
          out.push_back(std::move(cc));
        }
      }
    }
  }
  return out;
}

std::vector<double> realize_affine(const std::vector<double>& offers, const std::vector<double>& alpha,
                                   const std::vector<char>& renewable, const std::vector<double>& errors) {
  double total = 0.0;
  for (std::size_t j = 0; j < offers.size(); ++j)
    if (renewable[j]) total += errors[j];
  std::vector<double> g(offers.size());
  for (std::size_t j = 0; j < offers.size(); ++j)
    g[j] = renewable[j] ? offers[j] + errors[j] : offers[j] - alpha[j] * total;
  return g;
}

std::pair<double, double> wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  double p = static_cast<double>(successes) / static_cast<double>(n);
  double nn = static_cast<double>(n);
  double den = 1 + z * z / nn;
  double centre = (p + z * z / (2 * nn)) / den;
  double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<ViolationRate> monte_carlo_validate(const ValidatedInstance& inst, const UtilityDecision& decision,
                                                const StochasticConfig& cfg) {
  const auto& ren = inst.utility_renewables();
  const auto& ctl = inst.utility_controllables();
  const int E = inst.num_days(), T = inst.num_periods();
  const int R = static_cast<int>(ren.size()), C = static_cast<int>(ctl.size());

  auto cap = [&](int i) {
    const auto& g = inst.generator(i);
    return g.is_candidate() ? decision.capacity[static_cast<std::size_t>(i)] : g.g_max;
  };
  auto offer = [&](int i, int e, int t) {
    return decision.offers[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
  };

  // constraint layout: [e][t][c][upper, lower]
  const std::size_t ncons = static_cast<std::size_t>(E) * static_cast<std::size_t>(T) * static_cast<std::size_t>(C) * 2;
  std::vector<ViolationRate> report(ncons);
  std::vector<double> ub(ncons / 2), lb(ncons / 2);
  for (int e = 0; e < E; ++e)
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) {
        std::size_t k = (static_cast<std::size_t>(e) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)) *
                            static_cast<std::size_t>(C) + static_cast<std::size_t>(c);
        const auto& g = inst.generator(ctl[static_cast<std::size_t>(c)]);
        ub[k] = g.is_candidate() ? cap(ctl[static_cast<std::size_t>(c)]) : g.g_max;
        lb[k] = g.is_candidate() ? g.min_output_factor * cap(ctl[static_cast<std::size_t>(c)]) : g.g_min;
        report[2 * k] = {g.id + "/upper/" + std::to_string(e) + "/" + std::to_string(t), ub[k], 0, 0, 0, 0, 0};
        report[2 * k + 1] = {g.id + "/lower/" + std::to_string(e) + "/" + std::to_string(t), lb[k], 0, 0, 0, 0, 0};
      }

  const int tasks = std::max(1, cfg.tasks);
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(tasks), std::vector<long>(ncons, 0));
  std::vector<long> task_samples(static_cast<std::size_t>(tasks), cfg.samples / tasks);
  for (long r = 0; r < cfg.samples % tasks; ++r) task_samples[static_cast<std::size_t>(r)] += 1;

  auto run_task = [&](int task) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(task)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& cnt = counts[static_cast<std::size_t>(task)];
    for (long s = 0; s < task_samples[static_cast<std::size_t>(task)]; ++s) {
      for (int e = 0; e < E; ++e)
        for (int t = 0; t < T; ++t) {
          double total = 0.0;
          for (int r = 0; r < R; ++r) {
            int j = ren[static_cast<std::size_t>(r)];
            const auto& g = inst.generator(j);
            double cj = cap(j);
            double mu = cj * g.error_mean[static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
            double sd = cj * g.error_sd[static_cast<std::size_t>(e)][static_cast<std::size_t>(t)];
            total += mu + sd * normal(rng);
          }
          for (int c = 0; c < C; ++c) {
            int i = ctl[static_cast<std::size_t>(c)];
            double g = offer(i, e, t) - inst.participation(i, t) * total;
            std::size_t k = (static_cast<std::size_t>(e) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)) *
                                static_cast<std::size_t>(C) + static_cast<std::size_t>(c);
            if (g > ub[k]) ++cnt[2 * k];
            if (g < lb[k]) ++cnt[2 * k + 1];
          }
        }
    }
  };

  unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(tasks)));
  if (workers <= 1) {
    for (int k = 0; k < tasks; ++k) run_task(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int k; (k = next.fetch_add(1)) < tasks;) run_task(k);
      });
    for (auto& th : pool) th.join();
  }

  double z99 = inverse_normal_cdf(0.995);
  for (std::size_t k = 0; k < ncons; ++k) {
    long v = 0;
    for (const auto& c : counts) v += c[k];
    report[k].violations = v;
    report[k].samples = cfg.samples;
    report[k].rate = cfg.samples > 0 ? static_cast<double>(v) / static_cast<double>(cfg.samples) : 0.0;
    auto [lo, hi] = wilson_interval(v, cfg.samples, z99);
    report[k].ci_low = lo;
    report[k].ci_high = hi;
  }
  return report;
}

}  // namespace rpsopt
