#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refcast/objective.hpp"
#include "refcast/panel.hpp"
#include "refcast/priors.hpp"
#include "refcast/solver.hpp"

namespace refcast {

enum class PoolMode { Fixed, Varying };
enum class AccuracyMetric { RMSSE, RMSE };

struct TuningPlan {
  /// Pre-testing periods used for validation.
  int T = 21;
  /// Window for priors and sigma2.
  int l = 14;
  std::vector<double> lambda_grid;
  PoolMode mode = PoolMode::Fixed;
  AccuracyMetric metric = AccuracyMetric::RMSSE;
  PriorMethod prior_method = PriorMethod::CCR;
  Sigma2Form sigma2_form = Sigma2Form::Uncentered;

  TuningPlan();
  void validate() const;
};

/// {0} followed by 19 log-spaced values from 1e-3 to 1e6.
std::vector<double> default_lambda_grid();

/// "m5" (T=21, l=14, fixed pool) or "spf" (T=16, l=8, varying pool).
TuningPlan preset_plan(std::string_view name);

struct TuningResult {
  double lambda_star = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> per_lambda_scores;
  std::vector<Period> validation_periods;
  bool ties_broken = false;
  /// Experts used (panel indices).
  std::vector<std::size_t> pool;

  double best_score() const;
};

/// Everything needed to solve for one target period.
struct PeriodInputs {
  Period period = 0;
  std::vector<std::size_t> pool;
  std::vector<double> mu;
  PriorWeights priors;
  double sigma2 = 0.0;
  double mu_bar = 0.0;
};

/// Forecasts of `pool` at t; a missing cell takes the mean of the available
/// pool forecasts at t, or of all experts when no pool member reported.
std::vector<double> pooled_forecasts(const ForecastPanel &panel, std::span<const std::size_t> pool, Period t);

/// Pool forecasts over [first, last] with missing cells imputed as above.
HistoryWindow pooled_window(const ForecastPanel &panel, std::span<const std::size_t> pool, Period first,
                            Period last);

/// Priors and sigma2 estimated on [first, last] for `pool`, with the pool's
/// forecasts at t. Variances and the correlation use the raw records; the
/// sigma2 residuals use the imputed pool forecasts.
PeriodInputs period_inputs(const ForecastPanel &panel, std::span<const std::size_t> pool, Period t, Period first,
                           Period last, const TuningPlan &plan);

/// Spec for a variant at the given lambda; sigma2 is floored at 1e-12.
ModelSpec make_spec(Variant v, double lambda, const PeriodInputs &in);

/// solve() for two or more experts; a single expert gets weight one.
WeightVector solve_ensemble(std::span<const double> mu, const ModelSpec &spec, const SolverConfig &cfg,
                            std::optional<std::span<const double>> warm_z = std::nullopt);

/// Rolling-window validation over periods l+1..T with every expert.
TuningResult tune_fixed(const ForecastPanel &panel, Variant variant, const TuningPlan &plan,
                        const SolverConfig &solver = {});

/// Validation over the T periods before t_test, with the pool fixed to the
/// experts active at t_test that also reported in the preceding l periods.
TuningResult tune_varying(const ForecastPanel &panel, Period t_test, Variant variant, const TuningPlan &plan,
                          const SolverConfig &solver = {});

} // namespace refcast
