#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "refcast/panel.hpp"
#include "refcast/priors.hpp"

namespace refcast {

enum class BenchmarkMethod { SimpleMean, TrimmedMean, WinsorizedMean, VarianceWeights, CWM, CCR, RidgeStacking };

const std::array<BenchmarkMethod, 7> &all_benchmarks();
/// Report names: SimpleMean, TrimmedMean, ...
std::string benchmark_name(BenchmarkMethod m);
BenchmarkMethod parse_benchmark(std::string_view name);

struct BenchmarkSpec {
  double trim_fraction = 0.10;
  double winsor_fraction = 0.15;
  std::vector<double> ridge_alphas{0.1, 1.0, 10.0};
  bool fit_intercept = true;
  /// Window for the history-based methods.
  int l = 14;

  void validate() const;
};

double simple_mean(std::span<const double> mu);

/// Drops floor(fraction k) values at each end; the median when nothing would remain.
double trimmed_mean(std::span<const double> mu, double fraction);

/// Replaces floor(fraction k) values at each end by the nearest kept value.
double winsorized_mean(std::span<const double> mu, double fraction);

/// Inverse-variance combination over experts with available variances.
double variance_weights(const ErrorVariances &v2, std::span<const double> mu);
double variance_weights(std::span<const double> v2, std::span<const double> mu);

/// Contribution-weighted mean. `window` holds the history of the experts
/// whose current forecasts are `mu` (same order).
double cwm(const HistoryWindow &window, std::span<const double> mu);
/// Experts active at t, window [t-l, t-1].
double cwm(const ForecastPanel &panel, Period t, int l);

/// Unfloored common-correlation weights from the window history, with the
/// mean-precision rule for experts without history.
std::vector<double> ccr_benchmark_weights(const HistoryWindow &window);
double ccr_ensemble(const HistoryWindow &window, std::span<const double> mu);
double ccr_ensemble(const ForecastPanel &panel, Period t, int l);

struct RidgeFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;
  double alpha = 0.0;
  /// Leave-one-out mean squared error for each candidate alpha.
  std::vector<double> loo_mse;

  double predict(std::span<const double> x) const;
};

/// Ridge regression with the intercept left unpenalized; alpha is chosen by
/// exact leave-one-out error (earliest alpha on ties).
RidgeFit ridge_fit(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, std::span<const double> alphas,
                   bool fit_intercept);

/// Stacking over the experts active at t, trained on periods 1..last_history.
double ridge_stacking(const ForecastPanel &panel, Period t, Period last_history, const BenchmarkSpec &spec);
double ridge_stacking(const ForecastPanel &panel, Period t, const BenchmarkSpec &spec);

/// Forecast of any benchmark at t using history up to `origin` (window
/// [origin-l+1, origin] for the window-based methods).
double benchmark_forecast(BenchmarkMethod method, const ForecastPanel &panel, Period t, Period origin,
                          const BenchmarkSpec &spec);

} // namespace refcast
