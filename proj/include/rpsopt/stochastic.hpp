#pragma once

// Gaussian forecast errors, affine balancing and the exact deterministic
// form of the generator output chance constraints.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rpsopt/model.hpp"

namespace rpsopt {

double normal_cdf(double z);

/// Phi^{-1}(p). Throws std::domain_error outside (0, 1).
double inverse_normal_cdf(double p);

/// alpha * sqrt(sum_j (cap_j * sigma_j)^2)
double aggregate_stdev(double alpha, const std::vector<double>& caps, const std::vector<double>& sigma);

struct StochasticConfig {
  double eta = 0.03;
  double z = 0.0;  // filled by make()
  std::uint64_t seed = 1;
  long samples = 100000;
  int tasks = 16;  // fixed work split, independent of thread count

  static StochasticConfig make(double eta, std::uint64_t seed = 1, long samples = 100000);
};

/// One deterministic output limit of a controllable generator in (t, e):
///   offer_coef * gbar + sum capacity_coefs * g_max
///     + margin * sqrt(norm_constant + sum (w_j * g_max_j)^2) <= rhs
struct ChanceConstraint {
  std::string id;
  int gen = 0;
  int day = 0;
  int period = 0;
  bool upper = true;
  double offer_coef = 1.0;
  std::vector<std::pair<int, double>> capacity_coefs;  // generator index -> coefficient
  double rhs = 0.0;
  double margin = 0.0;  // z * alpha
  double norm_constant = 0.0;
  std::vector<std::pair<int, double>> norm_weights;  // candidate renewable -> sigma

  double stdev_norm(const std::vector<double>& capacity) const;
  /// lhs - rhs; positive means violated.
  double residual(double offer, const std::vector<double>& capacity) const;
};

/// Deterministic reformulation for every strategic controllable generator,
/// period and day. Throws if the strategic state has renewables but no
/// controllable balancer.
std::vector<ChanceConstraint> deterministic_generation_constraints(const ValidatedInstance& inst, double eta);

/// Real-time dispatch under affine control for one (t, e): renewables take
/// their own error, controllables offset the total.
std::vector<double> realize_affine(const std::vector<double>& offers, const std::vector<double>& alpha,
                                   const std::vector<char>& renewable, const std::vector<double>& errors);

struct ViolationRate {
  std::string id;
  double bound = 0.0;
  long violations = 0;
  long samples = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;  // Wilson 99% interval
};

/// Samples Gaussian forecast errors and reports the empirical violation rate
/// of every controllable output limit. Deterministic for a given seed and
/// task count.
std::vector<ViolationRate> monte_carlo_validate(const ValidatedInstance& inst, const UtilityDecision& decision,
                                                const StochasticConfig& cfg);

/// Wilson score interval at confidence level given by the quantile z.
std::pair<double, double> wilson_interval(long successes, long n, double z);

}  // namespace rpsopt
