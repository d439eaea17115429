#include "refcast/theory_mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <random>
#include <thread>

#include "refcast/error.hpp"

namespace refcast {

void RateExperiment::validate(bool ref) const {
  if (k_grid.empty() || !std::is_sorted(k_grid.begin(), k_grid.end())) {
    throw InputError("rate experiment: k grid must be non-empty and ascending");
  }
  const int kmin = ref ? 2 : 1;
  for (int k : k_grid) {
    if (k < kmin) {
      throw InputError("rate experiment: expert counts must be >= " + std::to_string(kmin));
    }
  }
  if (replications < 100) {
    throw InputError("rate experiment: need at least 100 replications");
  }
  if (!(sigma_y >= 0.0) || !(sigma0 > 0.0) || !(c > 0.0)) {
    throw InputError("rate experiment: sigma_y >= 0, sigma0 > 0 and c > 0 required");
  }
  if (ref && variant.transform == Transform::ShiftedLog) {
    throw InputError("rate experiment: only identity and log transforms have a lambda order");
  }
  if (workers < 1) {
    throw InputError("rate experiment: workers must be >= 1");
  }
}

double assumption_lambda(Variant v, int k, double c) {
  const double kk = static_cast<double>(k);
  const bool entropy = v.penalty == Penalty::Entropy;
  switch (v.transform) {
  case Transform::Identity:
    return entropy ? c / (kk * kk * std::log(kk)) : c / (kk * kk);
  case Transform::Log:
    return entropy ? c / std::log(kk) : c;
  case Transform::ShiftedLog:
    break;
  }
  throw DomainError("assumption_lambda: no order for shifted-log variants");
}

std::uint64_t replication_seed(std::uint64_t base, int k, int r) {
  // splitmix64 over a mix of the inputs
  std::uint64_t x = base ^ (static_cast<std::uint64_t>(k) << 32) ^ static_cast<std::uint64_t>(r);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double log_log_slope(const std::vector<RatePoint> &points) {
  if (points.size() < 2) {
    return 0.0;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(points.size());
  for (const auto &p : points) {
    const double x = std::log(static_cast<double>(p.k));
    const double y = std::log(p.excess);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct Draw {
  double sq_error = 0.0;
  double sq_excess = 0.0;
};

// Runs body(r) for r in [0, n) on `workers` threads; each result lands in its
// own slot so the reduction order is fixed.
std::vector<Draw> run_replications(int n, int workers, const std::function<Draw(int)> &body) {
  std::vector<Draw> out(static_cast<std::size_t>(n));
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int r = 0; r < n; ++r) {
      out[static_cast<std::size_t>(r)] = body(r);
    }
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  std::vector<std::thread> threads;
  for (int t = 0; t < w; ++t) {
    threads.emplace_back([&, t]() {
      try {
        for (int r = t; r < n; r += w) {
          out[static_cast<std::size_t>(r)] = body(r);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto &th : threads) {
    th.join();
  }
  for (auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return out;
}

RatePoint summarize(int k, const std::vector<Draw> &draws) {
  const double n = static_cast<double>(draws.size());
  double s1 = 0.0, s2 = 0.0, e1 = 0.0, e2 = 0.0;
  for (const auto &d : draws) {
    s1 += d.sq_error;
    s2 += d.sq_error * d.sq_error;
    e1 += d.sq_excess;
    e2 += d.sq_excess * d.sq_excess;
  }
  RatePoint p;
  p.k = k;
  p.mspe = s1 / n;
  p.se = std::sqrt(std::max(0.0, s2 / n - p.mspe * p.mspe) / (n - 1.0));
  p.excess = e1 / n;
  p.excess_se = std::sqrt(std::max(0.0, e2 / n - p.excess * p.excess) / (n - 1.0));
  return p;
}

template <class Combine>
RateResult run(const RateExperiment &exp, Combine combine) {
  RateResult res;
  for (int k : exp.k_grid) {
    auto draws = run_replications(exp.replications, exp.workers, [&](int r) {
      std::mt19937_64 rng(replication_seed(exp.seed, k, r));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> mu(static_cast<std::size_t>(k));
      for (double &x : mu) {
        x = exp.sigma0 * normal(rng);
      }
      const double y = exp.sigma_y * normal(rng);
      const double yhat = combine(mu, k, r);
      return Draw{(yhat - y) * (yhat - y), yhat * yhat};
    });
    auto p = summarize(k, draws);
    p.analytic_simple_mean = exp.sigma0 * exp.sigma0 / k + exp.sigma_y * exp.sigma_y;
    res.points.push_back(p);
  }
  res.slope = log_log_slope(res.points);
  return res;
}

} // namespace

RateResult mspe_simple_mean(const RateExperiment &exp) {
  exp.validate(false);
  return run(exp, [](const std::vector<double> &mu, int, int) {
    double s = 0.0;
    for (double x : mu) {
      s += x;
    }
    return s / static_cast<double>(mu.size());
  });
}

SolverConfig rate_solver_defaults() {
  SolverConfig cfg;
  cfg.restarts = 0;
  return cfg;
}

RateResult mspe_ref(const RateExperiment &exp, const SolverConfig &solver) {
  exp.validate(true);
  auto res = run(exp, [&](const std::vector<double> &mu, int k, int r) {
    ModelSpec spec;
    spec.transform = exp.variant.transform;
    spec.penalty = exp.variant.penalty;
    spec.lambda = assumption_lambda(exp.variant, k, exp.c);
    spec.priors.assign(static_cast<std::size_t>(k), 1.0 / k);
    double s = 0.0;
    for (double x : mu) {
      s += x;
    }
    spec.mu_bar = s / static_cast<double>(k);
    SolverConfig cfg = solver;
    cfg.seed = replication_seed(solver.seed, k, r);
    const auto w = solve(mu, spec, cfg);
    double yhat = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      yhat += w.weights[i] * mu[i];
    }
    return yhat;
  });
  for (auto &p : res.points) {
    p.lambda = assumption_lambda(exp.variant, p.k, exp.c);
  }
  return res;
}

} // namespace refcast
