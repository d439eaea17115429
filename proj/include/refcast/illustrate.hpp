#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "refcast/objective.hpp"
#include "refcast/solver.hpp"

namespace refcast {

struct IllustrationConfig {
  Variant variant{Transform::Identity, Penalty::L2};
  /// Defaults to 100 for identity and 5 otherwise.
  std::optional<double> lambda;
  /// Fixed second forecast; drawn from N(0, 5) with `seed` when absent.
  std::optional<double> mu2;
  /// Only used by shifted-log variants.
  double sigma2 = 1.0;
  int grid = 100;
  /// mu_1 runs over [0, mu1_max], so the squared deviation runs over [0, mu1_max^2].
  double mu1_max = 5.0;
  /// Prior of expert 1 on the lambda path.
  double path_s1 = 0.1;
  std::vector<double> path_lambdas{0.0, 1.0, 3.0, 10.0, 1e4};
  std::uint64_t seed = 7;
  SolverConfig solver;
};

struct ContourPoint {
  double s1 = 0.0;
  double deviation2 = 0.0;
  double w1 = 0.0;
};

struct PathPoint {
  double lambda = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double variance_term = 0.0;
  double penalty_term = 0.0;
};

struct Illustration {
  double lambda = 0.0;
  double mu1_path = 0.0;
  double mu2 = 0.0;
  /// Row-major: index i * grid + j has deviation index i and prior index j.
  std::vector<ContourPoint> contour;
  std::vector<PathPoint> path;
};

/// Two-expert illustration with E[mu] = 0: w1* over a grid of (s1, (mu1)^2)
/// with mu2 fixed, and w* along a lambda path with s = (s1, 1 - s1).
Illustration illustrate(const IllustrationConfig &cfg);

void write_contour_csv(std::ostream &out, const Illustration &ill);
void write_path_csv(std::ostream &out, const Illustration &ill);

} // namespace refcast
