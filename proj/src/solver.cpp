#include "refcast/solver.hpp"

#include <algorithm>
#include <deque>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "refcast/error.hpp"

namespace refcast {

void SolverConfig::validate() const {
  if (max_iterations < 1 || !(grad_tolerance > 0.0) || !(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) ||
      !(sufficient_decrease > 0.0 && sufficient_decrease < 1.0) || restarts < 0) {
    throw DomainError("solver config: invalid tolerances or step rule");
  }
}

namespace {

double inf_norm(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

std::string describe(const ModelSpec &spec, std::span<const double> mu) {
  std::ostringstream os;
  os.precision(17);
  os << variant_name(spec.variant()) << " lambda=" << spec.lambda << " mu=(";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    os << (i ? "," : "") << mu[i];
  }
  os << ") mu_bar=" << spec.mu_bar;
  return os.str();
}

struct Descent {
  std::vector<double> z;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Gradient descent with Barzilai-Borwein trial steps and a nonmonotone
// Armijo test against the largest of the last few objective values
// (Grippo-Lampariello-Lucidi). A monotone test rejects most BB steps on
// ill-conditioned cases (large lambda, tiny weights).
Descent descend(std::vector<double> z, std::span<const double> d2, const ModelSpec &spec,
                const SolverConfig &cfg, const std::function<void()> &fail) {
  const std::size_t k = z.size();
  std::vector<double> g, g_new, z_new(k);
  Descent out;
  double f = value_and_gradient_z(z, d2, spec, g);
  if (!std::isfinite(f)) {
    fail();
  }
  double step = cfg.initial_step;
  std::vector<double> z_prev, g_prev;
  std::deque<double> recent{f};
  constexpr std::size_t kMemory = 10;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (inf_norm(g) <= cfg.grad_tolerance) {
      out.converged = true;
      break;
    }
    if (it > 0) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double s = z[i] - z_prev[i];
        const double y = g[i] - g_prev[i];
        ss += s * s;
        sy += s * y;
      }
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : cfg.initial_step;
    }
    double gg = 0.0;
    for (double x : g) {
      gg += x * x;
    }
    bool accepted = false;
    double f_new = f;
    const double f_ref = *std::max_element(recent.begin(), recent.end());
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t i = 0; i < k; ++i) {
        z_new[i] = z[i] - step * g[i];
      }
      bool finite = std::all_of(z_new.begin(), z_new.end(), [](double x) { return std::isfinite(x); });
      if (finite) {
        try {
          f_new = objective_z(z_new, d2, spec).total;
        } catch (const NumericalError &) {
          f_new = std::numeric_limits<double>::infinity();
        }
        if (std::isfinite(f_new) && f_new <= f_ref - cfg.sufficient_decrease * step * gg) {
          accepted = true;
          break;
        }
      }
      step *= cfg.shrink;
    }
    if (!accepted) {
      break; // stalled at floating-point resolution
    }
    z_prev = z;
    g_prev = g;
    z = z_new;
    f = value_and_gradient_z(z, d2, spec, g_new);
    if (!std::isfinite(f)) {
      fail();
    }
    g.swap(g_new);
    recent.push_back(f);
    if (recent.size() > kMemory) {
      recent.pop_front();
    }
  }
  out.iterations = it;
  out.z = std::move(z);
  out.value = f;
  return out;
}

} // namespace

WeightVector solve(std::span<const double> mu, const ModelSpec &spec, const SolverConfig &cfg,
                   std::optional<std::span<const double>> warm_z) {
  const std::size_t k = mu.size();
  if (k < 2) {
    throw DomainError("solve: need at least 2 experts");
  }
  spec.validate(k);
  cfg.validate();
  const auto d2 = squared_deviations(mu, spec.mu_bar);
  auto fail = [&]() { throw NumericalError("solve: non-finite objective for " + describe(spec, mu)); };

  std::vector<std::vector<double>> starts;
  auto add_start = [&starts](std::vector<double> z) {
    const double m = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    for (double &x : z) {
      x -= m;
    }
    if (std::find(starts.begin(), starts.end(), z) == starts.end()) {
      starts.push_back(std::move(z));
    }
  };
  if (warm_z) {
    if (warm_z->size() != k) {
      throw DomainError("solve: warm start has wrong length");
    }
    add_start(std::vector<double>(warm_z->begin(), warm_z->end()));
  }
  {
    std::vector<double> z(k);
    for (std::size_t i = 0; i < k; ++i) {
      z[i] = std::log(spec.priors[i]);
    }
    add_start(std::move(z));
  }
  add_start(std::vector<double>(k, 0.0));
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> z(k);
    for (double &x : z) {
      x = normal(rng);
    }
    add_start(std::move(z));
  }

  Descent best;
  int best_index = -1;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    auto d = descend(starts[s], d2, spec, cfg, fail);
    if (best_index < 0 || d.value < best.value) {
      best = std::move(d);
      best_index = static_cast<int>(s);
    }
  }

  WeightVector out;
  out.z = best.z;
  out.weights = softmax(best.z);
  const auto parts = objective_z(best.z, d2, spec);
  out.objective_value = parts.total;
  out.variance_term = parts.variance_term;
  out.penalty_term = parts.penalty_term;
  out.variance_raw = parts.variance_raw;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.start_index = best_index;
  return out;
}

std::vector<double> closed_form_identity_l2(std::span<const double> mu, const ModelSpec &spec) {
  if (spec.transform != Transform::Identity || spec.penalty != Penalty::L2) {
    throw DomainError("closed_form_identity_l2: spec must be identity-l2");
  }
  const std::size_t k = mu.size();
  spec.validate(k);
  std::vector<double> w(k);
  if (spec.lambda == 0.0) {
    for (std::size_t i = 0; i < k; ++i) {
      const double d = mu[i] - spec.mu_bar;
      if (d == 0.0) {
        throw DomainError("closed_form_identity_l2: zero deviation at lambda = 0");
      }
      w[i] = 1.0 / (d * d);
    }
  } else {
    const auto d2 = squared_deviations(mu, spec.mu_bar);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      num += spec.priors[i] * d2[i] / (spec.lambda + d2[i]);
      den += 1.0 / (spec.lambda + d2[i]);
    }
    const double half_gamma = num / den;
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = (half_gamma + spec.lambda * spec.priors[i]) / (spec.lambda + d2[i]);
    }
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double &x : w) {
    x /= sum;
  }
  return w;
}

GridResult grid_oracle(std::span<const double> mu, const ModelSpec &spec, double resolution) {
  const std::size_t k = mu.size();
  if (k > 4) {
    throw DomainError("grid_oracle: k must be <= 4");
  }
  if (k < 1) {
    throw DomainError("grid_oracle: empty forecast vector");
  }
  if (!(resolution > 0.0 && resolution <= 0.5)) {
    throw DomainError("grid_oracle: resolution must lie in (0, 0.5]");
  }
  spec.validate(k);
  const int n = static_cast<int>(std::lround(1.0 / resolution));
  const int lo = spec.penalty == Penalty::Entropy ? 1 : 0;
  const auto d2 = squared_deviations(mu, spec.mu_bar);

  std::vector<int> c(k, lo), best_c;
  std::vector<double> w(k);
  auto eval = [&](const std::vector<int> &cells) {
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = static_cast<double>(cells[i]) / n;
    }
    try {
      return objective_d2(w, d2, spec).total;
    } catch (const Error &) {
      return std::numeric_limits<double>::infinity();
    }
  };

  GridResult out;
  out.objective = std::numeric_limits<double>::infinity();
  // Enumerate compositions of n into k parts, each >= lo.
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int remaining) {
    if (i + 1 == k) {
      if (remaining < lo) {
        return;
      }
      c[i] = remaining;
      ++out.points;
      const double v = eval(c);
      if (v < out.objective) {
        out.objective = v;
        best_c = c;
      }
      return;
    }
    const int rest_min = lo * static_cast<int>(k - i - 1);
    for (int x = lo; x <= remaining - rest_min; ++x) {
      c[i] = x;
      rec(i + 1, remaining - x);
    }
  };
  rec(0, n);
  if (best_c.empty()) {
    throw NumericalError("grid_oracle: no finite lattice point");
  }
  out.weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.weights[i] = static_cast<double>(best_c[i]) / n;
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j || best_c[i] - 1 < lo) {
        continue;
      }
      auto nb = best_c;
      --nb[i];
      ++nb[j];
      const double v = eval(nb);
      if (std::isfinite(v)) {
        out.step_variation = std::max(out.step_variation, std::abs(v - out.objective));
      }
    }
  }
  return out;
}

std::vector<WeightVector> weight_path(std::span<const double> mu, const ModelSpec &spec_base,
                                      std::span<const double> lambdas, const SolverConfig &cfg) {
  if (lambdas.empty()) {
    throw DomainError("weight_path: empty lambda list");
  }
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
    throw DomainError("weight_path: lambdas must be ascending");
  }
  std::vector<WeightVector> out;
  out.reserve(lambdas.size());
  ModelSpec spec = spec_base;
  for (double lambda : lambdas) {
    spec.lambda = lambda;
    if (out.empty()) {
      out.push_back(solve(mu, spec, cfg));
    } else {
      const auto warm = out.back().z;
      out.push_back(solve(mu, spec, cfg, std::span<const double>(warm)));
    }
  }
  return out;
}

} // namespace refcast
