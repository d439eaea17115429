#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "refcast/objective.hpp"
#include "refcast/panel.hpp"

namespace refcast {

/// Root mean squared one-step naive error over the in-sample history.
/// Throws DomainError when it is zero.
double naive_scale(std::span<const double> insample, const std::string &series_id = "");

/// Pairs where either value is missing are skipped; at least one must remain.
double rmse(std::span<const double> forecasts, std::span<const double> actuals);

/// rmse scaled by naive_scale(insample).
double rmsse(std::span<const double> forecasts, std::span<const double> actuals,
             std::span<const double> insample, const std::string &series_id = "");

/// |penalty| / (|penalty| + |variance|), 0 when both vanish.
double penalty_share(double penalty_term, double variance_term);
double penalty_share(const WeightVector &w);

enum class PsBin { Low, Medium, High };
std::string ps_bin_name(PsBin b);

/// Equal-count tercile bins; remainders go to the lower bins first and ties
/// keep their original order.
std::vector<PsBin> ps_bins(std::span<const double> shares);

/// benchmark - reference.
double delta_rmsse(double benchmark, double reference);

/// a / b, or nullopt when b is zero.
std::optional<double> ps_ratio(double ps_a, double ps_b);

struct MethodScore {
  std::string series_id;
  std::string method;
  double rmsse = 0.0;
  double rmse = 0.0;
  std::size_t periods = 0;
};

struct PenaltyShareRecord {
  std::string series_id;
  Period period = 0;
  std::string variant;
  double lambda = 0.0;
  double share = 0.0;
  PsBin bin = PsBin::Low;
};

struct DeltaRecord {
  std::string series_id;
  std::string benchmark;
  double delta = 0.0;
};

struct MethodAggregate {
  std::string method;
  double mean_rmsse = 0.0;
  double sd_rmsse = 0.0;
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  std::size_t series = 0;
};

struct EvaluationReport {
  std::string reference_method = "REF";
  std::vector<std::string> benchmarks;
  std::vector<MethodScore> scores;
  std::vector<PenaltyShareRecord> shares;
  std::vector<DeltaRecord> deltas;
  std::vector<MethodAggregate> aggregates;

  /// Sorts by key, derives deltas against the reference method, assigns PS
  /// bins over all records and computes per-method mean and sample sd.
  void finalize();

  /// Long format: series_id,method,metric,value.
  void write_csv(std::ostream &out) const;
  void write_json(std::ostream &out) const;
  /// series_id,period,variant,lambda,penalty_share,bin
  void write_penalty_shares(std::ostream &out) const;

  /// Methods ordered by mean RMSSE, best first.
  std::vector<std::string> ranking() const;
};

} // namespace refcast
