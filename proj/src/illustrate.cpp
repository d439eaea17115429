#include "refcast/illustrate.hpp"

#include <cmath>
#include <random>

#include "refcast/csv.hpp"
#include "refcast/error.hpp"

namespace refcast {

Illustration illustrate(const IllustrationConfig &cfg) {
  if (cfg.grid < 2) {
    throw InputError("illustrate: grid must be >= 2");
  }
  if (!(cfg.mu1_max > 0.0)) {
    throw InputError("illustrate: mu1_max must be positive");
  }
  if (!(cfg.path_s1 > 0.0 && cfg.path_s1 < 1.0)) {
    throw InputError("illustrate: path_s1 must lie in (0, 1)");
  }
  Illustration ill;
  ill.lambda = cfg.lambda.value_or(cfg.variant.transform == Transform::Identity ? 100.0 : 5.0);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> draw(0.0, std::sqrt(5.0));
  ill.mu2 = cfg.mu2.value_or(draw(rng));

  ModelSpec spec;
  spec.transform = cfg.variant.transform;
  spec.penalty = cfg.variant.penalty;
  spec.sigma2 = cfg.sigma2;
  spec.mu_bar = 0.0;
  spec.lambda = ill.lambda;

  const int n = cfg.grid;
  ill.contour.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double mu1 = cfg.mu1_max * i / (n - 1);
    const std::vector<double> mu{mu1, ill.mu2};
    for (int j = 0; j < n; ++j) {
      const double s1 = static_cast<double>(j + 1) / (n + 1);
      spec.priors = {s1, 1.0 - s1};
      const auto w = solve(mu, spec, cfg.solver);
      ill.contour.push_back({s1, mu1 * mu1, w.weights[0]});
    }
  }

  // Path: two draws from N(0, 5), the second relabelled as the larger deviation.
  double a = draw(rng);
  double b = draw(rng);
  if (std::abs(a) > std::abs(b)) {
    std::swap(a, b);
  }
  ill.mu1_path = a;
  const std::vector<double> mu{a, b};
  ModelSpec base = spec;
  base.priors = {cfg.path_s1, 1.0 - cfg.path_s1};
  const auto path = weight_path(mu, base, cfg.path_lambdas, cfg.solver);
  for (std::size_t p = 0; p < path.size(); ++p) {
    ill.path.push_back({cfg.path_lambdas[p], path[p].weights[0], path[p].weights[1], path[p].variance_term,
                        path[p].penalty_term});
  }
  return ill;
}

void write_contour_csv(std::ostream &out, const Illustration &ill) {
  using csv::format_double;
  csv::write_row(out, {"s1", "deviation2", "w1", "lambda", "mu2"});
  for (const auto &p : ill.contour) {
    csv::write_row(out, {format_double(p.s1), format_double(p.deviation2), format_double(p.w1),
                         format_double(ill.lambda), format_double(ill.mu2)});
  }
}

void write_path_csv(std::ostream &out, const Illustration &ill) {
  using csv::format_double;
  csv::write_row(out, {"lambda", "w1", "w2", "variance_term", "penalty_term"});
  for (const auto &p : ill.path) {
    csv::write_row(out, {format_double(p.lambda), format_double(p.w1), format_double(p.w2),
                         format_double(p.variance_term), format_double(p.penalty_term)});
  }
}

} // namespace refcast
