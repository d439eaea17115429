#include "refcast/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refcast/error.hpp"
#include "refcast/metrics.hpp"

namespace refcast {

std::vector<double> default_lambda_grid() {
  std::vector<double> g{0.0};
  for (int j = 0; j < 19; ++j) {
    g.push_back(std::pow(10.0, -3.0 + 9.0 * j / 18.0));
  }
  return g;
}

TuningPlan::TuningPlan() : lambda_grid(default_lambda_grid()) {}

void TuningPlan::validate() const {
  if (!(T > l && l >= 2)) {
    throw InputError("tuning plan: need T > l >= 2 (got T=" + std::to_string(T) + ", l=" + std::to_string(l) + ")");
  }
  if (lambda_grid.empty()) {
    throw InputError("tuning plan: empty lambda grid");
  }
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) {
      throw InputError("tuning plan: lambda values must be finite and >= 0");
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw InputError("tuning plan: lambda grid must be strictly ascending");
    }
  }
  if (lambda_grid.front() != 0.0) {
    throw InputError("tuning plan: lambda grid must include 0");
  }
}

TuningPlan preset_plan(std::string_view name) {
  TuningPlan p;
  if (name == "m5") {
    p.T = 21;
    p.l = 14;
    p.mode = PoolMode::Fixed;
  } else if (name == "spf") {
    p.T = 16;
    p.l = 8;
    p.mode = PoolMode::Varying;
  } else {
    throw InputError("unknown preset '" + std::string(name) + "' (expected m5 or spf)");
  }
  return p;
}

double TuningResult::best_score() const {
  const auto it = std::find(lambda_grid.begin(), lambda_grid.end(), lambda_star);
  return per_lambda_scores.at(static_cast<std::size_t>(it - lambda_grid.begin()));
}

std::vector<double> pooled_forecasts(const ForecastPanel &panel, std::span<const std::size_t> pool, Period t) {
  const auto all = panel.forecasts_at(t);
  std::vector<double> mu(pool.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < pool.size(); ++r) {
    mu[r] = all.at(pool[r]);
    if (!is_missing(mu[r])) {
      sum += mu[r];
      ++n;
    }
  }
  if (n == pool.size()) {
    return mu;
  }
  const double fill = n > 0 ? sum / static_cast<double>(n) : consensus_mean(all);
  for (double &x : mu) {
    if (is_missing(x)) {
      x = fill;
    }
  }
  return mu;
}

HistoryWindow pooled_window(const ForecastPanel &panel, std::span<const std::size_t> pool, Period first,
                            Period last) {
  HistoryWindow w = history_window(panel, first, last, pool);
  for (Period tau = w.first; tau <= w.last; ++tau) {
    const auto mu = pooled_forecasts(panel, pool, tau);
    for (std::size_t r = 0; r < pool.size(); ++r) {
      w.forecasts[r][static_cast<std::size_t>(tau - w.first)] = mu[r];
    }
  }
  return w;
}

PeriodInputs period_inputs(const ForecastPanel &panel, std::span<const std::size_t> pool, Period t, Period first,
                           Period last, const TuningPlan &plan) {
  if (pool.empty()) {
    throw DomainError("period_inputs: empty pool at period " + std::to_string(t));
  }
  PeriodInputs in;
  in.period = t;
  in.pool.assign(pool.begin(), pool.end());
  const auto raw = history_window(panel, first, last, pool);
  const auto variances = estimate_error_variances(raw);
  double rho = 0.0;
  if (plan.prior_method == PriorMethod::CCR && pool.size() > 1) {
    rho = estimate_rho_c(raw).rho;
  }
  in.priors = impute_priors(variances, rho, plan.prior_method);
  in.sigma2 = estimate_sigma2(pooled_window(panel, pool, first, last), plan.sigma2_form);
  in.mu = pooled_forecasts(panel, pool, t);
  in.mu_bar = consensus_mean(in.mu);
  return in;
}

ModelSpec make_spec(Variant v, double lambda, const PeriodInputs &in) {
  ModelSpec spec;
  spec.transform = v.transform;
  spec.penalty = v.penalty;
  spec.lambda = lambda;
  spec.sigma2 = std::max(in.sigma2, 1e-12);
  spec.priors = in.priors.s;
  spec.mu_bar = in.mu_bar;
  return spec;
}

WeightVector solve_ensemble(std::span<const double> mu, const ModelSpec &spec, const SolverConfig &cfg,
                            std::optional<std::span<const double>> warm_z) {
  if (mu.size() >= 2) {
    return solve(mu, spec, cfg, warm_z);
  }
  if (mu.size() != 1) {
    throw DomainError("solve_ensemble: empty pool");
  }
  WeightVector w;
  w.weights = {1.0};
  w.z = {0.0};
  const auto parts = objective(w.weights, mu, spec);
  w.objective_value = parts.total;
  w.variance_term = parts.variance_term;
  w.penalty_term = parts.penalty_term;
  w.variance_raw = parts.variance_raw;
  w.converged = true;
  return w;
}

namespace {

// Scores every lambda over the validation periods; `inputs_for(tau)` builds
// the inputs at a validation period.
template <class InputsFor>
TuningResult run_validation(const ForecastPanel &panel, Variant variant, const TuningPlan &plan,
                            const SolverConfig &solver, Period first_val, Period last_val, InputsFor inputs_for) {
  const auto &grid = plan.lambda_grid;
  std::vector<std::vector<double>> errors(grid.size());
  TuningResult res;
  res.lambda_grid = grid;
  for (Period tau = first_val; tau <= last_val; ++tau) {
    if (!panel.has_actual(tau)) {
      throw InputError("series '" + panel.series_id() + "': missing actual at validation period " +
                       std::to_string(tau));
    }
    res.validation_periods.push_back(tau);
    const PeriodInputs in = inputs_for(tau);
    std::vector<double> warm;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto spec = make_spec(variant, grid[g], in);
      const auto w = warm.empty() ? solve_ensemble(in.mu, spec, solver)
                                  : solve_ensemble(in.mu, spec, solver, std::span<const double>(warm));
      warm = w.z;
      double yhat = 0.0;
      for (std::size_t r = 0; r < in.mu.size(); ++r) {
        yhat += w.weights[r] * in.mu[r];
      }
      errors[g].push_back(yhat - panel.actual(tau));
    }
  }
  const double scale = plan.metric == AccuracyMetric::RMSSE ? naive_scale(panel.insample(), panel.series_id()) : 1.0;
  for (const auto &e : errors) {
    double ss = 0.0;
    for (double x : e) {
      ss += x * x;
    }
    res.per_lambda_scores.push_back(std::sqrt(ss / static_cast<double>(e.size())) / scale);
  }
  const double best = *std::min_element(res.per_lambda_scores.begin(), res.per_lambda_scores.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::size_t winners = 0;
  bool chosen = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (res.per_lambda_scores[g] <= best + tol) {
      ++winners;
      if (!chosen) {
        res.lambda_star = grid[g];
        chosen = true;
      }
    }
  }
  res.ties_broken = winners > 1;
  return res;
}

} // namespace

TuningResult tune_fixed(const ForecastPanel &panel, Variant variant, const TuningPlan &plan,
                        const SolverConfig &solver) {
  plan.validate();
  if (plan.T > panel.last_period()) {
    throw InputError("series '" + panel.series_id() + "': T=" + std::to_string(plan.T) + " exceeds the " +
                     std::to_string(panel.last_period()) + " forecast periods");
  }
  std::vector<std::size_t> pool(panel.expert_count());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  auto res = run_validation(panel, variant, plan, solver, plan.l + 1, plan.T, [&](Period tau) {
    return period_inputs(panel, pool, tau, tau - plan.l, tau - 1, plan);
  });
  res.pool = pool;
  return res;
}

TuningResult tune_varying(const ForecastPanel &panel, Period t_test, Variant variant, const TuningPlan &plan,
                          const SolverConfig &solver) {
  plan.validate();
  const Period start = t_test - plan.T;
  if (start < 1 || !panel.contains(t_test)) {
    throw InputError("series '" + panel.series_id() + "': test period " + std::to_string(t_test) +
                     " needs " + std::to_string(plan.T) + " earlier periods");
  }
  const auto snap = snapshot_pool(panel, t_test, plan.l);
  if (snap.window_experts.empty()) {
    throw InputError("series '" + panel.series_id() + "': empty expert pool at test period " +
                     std::to_string(t_test));
  }
  const auto &pool = snap.window_experts;
  auto res = run_validation(panel, variant, plan, solver, start + plan.l, t_test - 1, [&](Period tau) {
    return period_inputs(panel, pool, tau, tau - plan.l, tau - 1, plan);
  });
  res.pool = pool;
  return res;
}

} // namespace refcast
