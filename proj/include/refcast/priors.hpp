#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refcast/panel.hpp"

namespace refcast {

/// Forecasts and actuals over a block of consecutive periods, restricted to a
/// subset of experts. Missing forecasts are kMissing.
struct HistoryWindow {
  Period first = 0;
  Period last = -1;
  /// Panel expert index for each row of `forecasts`.
  std::vector<std::size_t> experts;
  /// forecasts[r][tau - first]
  std::vector<std::vector<double>> forecasts;
  std::vector<double> actuals;

  std::size_t length() const { return actuals.size(); }
};

/// Periods [first, last] clipped to the forecast range. Empty `experts`
/// means every expert of the panel.
HistoryWindow history_window(const ForecastPanel &panel, Period first, Period last,
                             std::span<const std::size_t> experts = {});

enum class PriorMethod { VarianceWeights, CCR, UserSupplied, ImputedMix };
std::string prior_method_name(PriorMethod m);

struct PriorWeights {
  std::vector<double> s;
  PriorMethod method = PriorMethod::CCR;
  std::optional<double> rho_hat;
  std::vector<double> v2_hat;
  /// Entries lifted to the floor.
  std::vector<bool> floored;
};

/// Lower bound applied to every prior weight.
inline constexpr double kPriorFloor = 1e-6;
/// Lower bound applied to error variances before inverting them.
inline constexpr double kVarianceFloor = 1e-12;

/// Mean of the non-missing entries.
double consensus_mean(std::span<const double> mu);

enum class Sigma2Form {
  /// (1/(n-1)) sum (y - theta)^2
  Uncentered,
  /// Sample variance of y - theta.
  Centered,
};

/// Variance of the simple-mean residuals y - theta over the window, where
/// theta is the mean of the available forecasts in each period. Periods
/// without an actual are skipped.
double estimate_sigma2(const HistoryWindow &window, Sigma2Form form = Sigma2Form::Uncentered);
double estimate_sigma2(const ForecastPanel &panel, Period t, int l, Sigma2Form form = Sigma2Form::Uncentered);

struct ErrorVariances {
  std::vector<double> v2;
  std::vector<bool> available;
};

/// Mean squared error of each expert over the periods where both its
/// forecast and the actual exist.
ErrorVariances estimate_error_variances(const HistoryWindow &window);
ErrorVariances estimate_error_variances(const ForecastPanel &panel, Period t, int l);

struct RhoEstimate {
  double rho = 0.0;
  /// Fewer than two usable experts; rho is 0.
  bool fallback = false;
  std::size_t complete_experts = 0;
};

/// Strategy for estimating the common error correlation.
using RhoEstimator = std::function<RhoEstimate(const HistoryWindow &)>;

/// Mean pairwise Pearson correlation of the error series of experts with a
/// complete history on the window, clipped to [-1/(k-1) + 1e-6, 0.999] where
/// k is the number of experts in the window.
RhoEstimate mean_pairwise_correlation(const HistoryWindow &window);

RhoEstimate estimate_rho_c(const HistoryWindow &window, const RhoEstimator &estimator = mean_pairwise_correlation);
RhoEstimate estimate_rho_c(const ForecastPanel &panel, Period t, int l);

/// Unfloored common-correlation weights; they sum to one but may be negative.
std::vector<double> ccr_raw_weights(std::span<const double> v2, double rho);

/// Lifts entries below `floor` to exactly `floor` and rescales the rest so
/// the vector sums to one. Returns the floored mask.
std::vector<bool> floor_and_renormalize(std::vector<double> &s, double floor = kPriorFloor);

/// Common-correlation prior weights, floored.
PriorWeights ccr_prior(std::span<const double> v2, double rho);

/// Inverse-variance prior weights (ccr_prior with rho = 0).
PriorWeights variance_prior(std::span<const double> v2);

/// Completes missing variances by giving history-less experts the mean
/// precision of the others, then applies ccr_prior (or variance_prior when
/// `method` is VarianceWeights). No history at all gives uniform weights.
PriorWeights impute_priors(const ErrorVariances &variances, double rho,
                           PriorMethod method = PriorMethod::CCR);

/// Variances with history-less experts filled by the mean precision rule.
std::optional<std::vector<double>> impute_variances(const ErrorVariances &variances);

} // namespace refcast
