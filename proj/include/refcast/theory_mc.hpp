#pragma once

#include <cstdint>
#include <vector>

#include "refcast/objective.hpp"
#include "refcast/solver.hpp"

namespace refcast {

struct RateExperiment {
  std::vector<int> k_grid{10, 40, 160};
  int replications = 2000;
  double sigma_y = 1.0;
  /// Expert forecasts are i.i.d. N(0, sigma0^2), independent of y ~ N(0, sigma_y^2).
  double sigma0 = 1.0;
  /// Must be Identity or Log.
  Variant variant{Transform::Identity, Penalty::L2};
  /// Constant in the lambda order.
  double c = 1.0;
  std::uint64_t seed = 20240101;
  /// Worker threads; results do not depend on it.
  int workers = 1;

  void validate(bool ref) const;
};

/// Lambda order for k experts: identity-l2 c/k^2, identity-entropy
/// c/(k^2 log k), log-l2 c, log-entropy c/log k.
double assumption_lambda(Variant v, int k, double c);

struct RatePoint {
  int k = 0;
  double lambda = 0.0;
  /// Mean of (yhat - y)^2 and its standard error.
  double mspe = 0.0;
  double se = 0.0;
  /// Mean of (yhat - E[y])^2, an unbiased estimate of mspe - sigma_y^2.
  double excess = 0.0;
  double excess_se = 0.0;
  /// sigma0^2 / k + sigma_y^2
  double analytic_simple_mean = 0.0;
};

struct RateResult {
  std::vector<RatePoint> points;
  /// Least-squares slope of log(excess) on log(k).
  double slope = 0.0;
};

RateResult mspe_simple_mean(const RateExperiment &exp);
/// Solver defaults for the rate experiment. Priors are uniform, so the prior
/// start and the zero start coincide; random restarts are off.
SolverConfig rate_solver_defaults();

RateResult mspe_ref(const RateExperiment &exp, const SolverConfig &solver = rate_solver_defaults());

/// Seed for replication r at grid point k, independent of scheduling.
std::uint64_t replication_seed(std::uint64_t base, int k, int r);

double log_log_slope(const std::vector<RatePoint> &points);

} // namespace refcast
