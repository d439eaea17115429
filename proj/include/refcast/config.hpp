#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refcast/benchmarks.hpp"
#include "refcast/objective.hpp"
#include "refcast/solver.hpp"
#include "refcast/tuner.hpp"

namespace refcast {

enum class HeadlineMode { AverageOfSix, ValidationBest };

struct RunConfig {
  std::string forecasts_csv;
  std::string actuals_csv;
  std::string insample_csv;
  TuningPlan plan;
  /// Number of test periods after T; 0 means every remaining period.
  int horizon = 0;
  std::vector<Variant> variants;
  std::vector<BenchmarkMethod> benchmarks;
  BenchmarkSpec benchmark_params;
  HeadlineMode headline = HeadlineMode::AverageOfSix;
  bool predictive = false;
  double predictive_m = 1.0;
  double predictive_a = 2.0;
  SolverConfig solver;
  std::string output_dir = "refcast-out";
  std::uint64_t seed = 0;
  int workers = 1;

  RunConfig();

  /// Checks value ranges and that the input files exist (InputError otherwise).
  void validate() const;
};

/// Applies a named preset ("m5" or "spf") to the tuning plan and horizon.
void apply_preset(RunConfig &cfg, const std::string &name);

/// Parses a JSON run configuration. Relative input paths are resolved
/// against `base_dir`. Unknown keys are rejected.
RunConfig parse_run_config(const std::string &json_text, const std::string &base_dir = "");
RunConfig load_run_config(const std::string &path);

/// Environment overrides: REFCAST_OUTPUT_DIR and REFCAST_WORKERS.
void apply_environment(RunConfig &cfg);

/// JSON rendering of a configuration (round-trips through parse_run_config).
std::string dump_run_config(const RunConfig &cfg);

} // namespace refcast
