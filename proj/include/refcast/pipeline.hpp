#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refcast/config.hpp"
#include "refcast/metrics.hpp"
#include "refcast/panel.hpp"

namespace refcast {

struct PredictiveSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

struct ForecastRow {
  std::string series_id;
  Period period = 0;
  std::string method;
  double forecast = 0.0;
  double actual = kMissing;
  std::optional<PredictiveSummary> predictive;
};

struct TuningRow {
  std::string series_id;
  /// Test period for varying pools; 0 when one lambda serves every test period.
  Period test_period = 0;
  std::string variant;
  double lambda_star = 0.0;
  double score = 0.0;
  bool ties_broken = false;
};

struct PipelineResult {
  EvaluationReport report;
  std::vector<ForecastRow> forecasts;
  std::vector<TuningRow> tuning;
};

/// Method name of REF variant v in reports, e.g. "REF[log-entropy]".
std::string ref_variant_method(Variant v);

/// Test periods T+1 .. T+horizon (or the last period when horizon is 0).
std::vector<Period> test_periods(const ForecastPanel &panel, const RunConfig &cfg);

/// Tunes, forecasts and scores every panel in memory. Series run on
/// cfg.workers threads; results are merged in series order. With
/// include_ref false only the benchmarks are computed.
PipelineResult evaluate_panels(std::span<const ForecastPanel> panels, const RunConfig &cfg,
                               bool include_ref = true);

/// Lambda selection only.
std::vector<TuningRow> tune_panels(std::span<const ForecastPanel> panels, const RunConfig &cfg);

/// Output files written by write_outputs.
const std::vector<std::string> &output_files();

/// Writes report.csv, report.json, forecasts.csv, penalty_share.csv and
/// tuning.csv into `dir`. Files are staged and renamed at the end; nothing
/// is left behind on failure.
void write_outputs(const PipelineResult &result, const std::string &dir, bool predictive_columns);

/// Validates cfg, loads the panels, evaluates and writes the outputs.
PipelineResult run_pipeline(const RunConfig &cfg, bool include_ref = true);

} // namespace refcast
