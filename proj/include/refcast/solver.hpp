#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "refcast/objective.hpp"

namespace refcast {

struct SolverConfig {
  int max_iterations = 2000;
  /// Stop when the infinity norm of the z-gradient falls below this.
  double grad_tolerance = 1e-9;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  /// Random starts on top of the prior and uniform starts.
  int restarts = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Minimizes the objective over the simplex by gradient descent in softmax
/// coordinates. Starts are tried in order: warm_z (if given), log s, 0, then
/// cfg.restarts draws from N(0, 1). The lowest objective wins; exact ties go
/// to the earlier start.
WeightVector solve(std::span<const double> mu, const ModelSpec &spec, const SolverConfig &cfg = {},
                   std::optional<std::span<const double>> warm_z = std::nullopt);

/// Closed-form Identity-L2 weights. lambda = 0 gives w_i proportional to
/// 1/d_i^2, which requires every raw deviation to be non-zero.
std::vector<double> closed_form_identity_l2(std::span<const double> mu, const ModelSpec &spec);

struct GridResult {
  std::vector<double> weights;
  double objective = 0.0;
  /// Largest objective change between the argmin and a neighbouring lattice point.
  double step_variation = 0.0;
  std::size_t points = 0;
};

/// Exhaustive search over the simplex lattice with spacing `resolution`
/// (1e-2 or 1e-3). Entropy variants use interior points only. k <= 4.
GridResult grid_oracle(std::span<const double> mu, const ModelSpec &spec, double resolution);

/// Solutions along an ascending lambda list, each warm-started from the previous z.
std::vector<WeightVector> weight_path(std::span<const double> mu, const ModelSpec &spec_base,
                                      std::span<const double> lambdas, const SolverConfig &cfg = {});

} // namespace refcast
