#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace refcast {

/// Integer period index. Forecast periods run 1..T*, in-sample history -T0..0.
using Period = int;

/// Missing cells are stored as quiet NaN.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Raw contents of a panel, used to build a validated ForecastPanel.
struct PanelData {
  std::string series_id;
  std::vector<std::string> experts;
  /// forecasts[i][t-1] is expert i's forecast for period t; kMissing if absent.
  std::vector<std::vector<double>> forecasts;
  /// actuals[t-1]; trailing periods may be kMissing (not yet realised).
  std::vector<double> actuals;
  /// History for periods -T0..0 in order; insample.back() is period 0.
  std::vector<double> insample;
};

/// Expert forecasts for one target series, aligned with realised values and
/// the pre-forecast history used for scaling errors. Immutable once built.
class ForecastPanel {
public:
  /// Validates the panel invariants and throws InputError on violation.
  explicit ForecastPanel(PanelData data);

  const std::string &series_id() const { return data_.series_id; }
  const std::vector<std::string> &experts() const { return data_.experts; }
  std::size_t expert_count() const { return data_.experts.size(); }

  /// Number of forecast periods T*; valid periods are 1..T*.
  Period last_period() const { return static_cast<Period>(data_.actuals.size()); }
  bool contains(Period t) const { return t >= 1 && t <= last_period(); }

  double forecast(std::size_t expert, Period t) const;
  bool has_forecast(std::size_t expert, Period t) const { return !is_missing(forecast(expert, t)); }
  /// All k forecasts for period t, kMissing where absent.
  std::vector<double> forecasts_at(Period t) const;

  double actual(Period t) const;
  bool has_actual(Period t) const { return !is_missing(actual(t)); }
  /// Last period with a realised value (0 when none).
  Period last_observed_period() const;

  std::span<const double> insample() const { return data_.insample; }
  std::size_t missing_count() const;

  const PanelData &data() const { return data_; }

private:
  void check_period(Period t) const;

  PanelData data_;
};

/// Experts available at a period, and those of them with recent history.
struct PoolSnapshot {
  Period period = 0;
  std::vector<std::size_t> active_experts;
  std::vector<std::size_t> window_experts;
};

/// active = experts with a forecast at t; window = active experts with at
/// least one forecast in [t-l, t-1].
PoolSnapshot snapshot_pool(const ForecastPanel &panel, Period t, int window);

/// Reads the three long-format CSV files (see README) into one panel per
/// series, ordered by series id.
std::vector<ForecastPanel> load_panels(const std::string &forecasts_csv,
                                       const std::string &actuals_csv,
                                       const std::string &insample_csv);

/// Stream-based variant of load_panels.
std::vector<ForecastPanel> load_panels(std::istream &forecasts, std::istream &actuals,
                                       std::istream &insample);

/// Writes panels in the same three-file layout accepted by load_panels.
/// Missing cells are omitted.
void write_panels(std::span<const ForecastPanel> panels, const std::string &forecasts_csv,
                  const std::string &actuals_csv, const std::string &insample_csv);

struct SyntheticConfig {
  std::string series_id = "synthetic";
  /// Common pairwise correlation of expert errors, in [0, 1).
  double rho = 0.0;
  /// Probability that any single forecast cell is dropped.
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  /// Number of in-sample periods (-T0..0 gives insample_length values).
  int insample_length = 50;
  /// Per-expert error standard deviations; empty means evenly spread over [0.5, 2].
  std::vector<double> error_sd;
  /// Starting level and innovation sd of the random-walk target.
  double level = 100.0;
  double step_sd = 1.0;
};

/// Error sds used by generate_synthetic for k experts.
std::vector<double> synthetic_error_sd(std::size_t k, const SyntheticConfig &cfg);

/// Random-walk target with expert errors e_i = sd_i (sqrt(rho) F + sqrt(1-rho) eps_i),
/// so Corr(e_i, e_j) = rho and Var(e_i) = sd_i^2. Deterministic for a given seed.
ForecastPanel generate_synthetic(std::size_t k, int periods, const SyntheticConfig &cfg);

} // namespace refcast
