// refcast command-line driver.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "refcast/config.hpp"
#include "refcast/csv.hpp"
#include "refcast/error.hpp"
#include "refcast/illustrate.hpp"
#include "refcast/metrics.hpp"
#include "refcast/pipeline.hpp"
#include "refcast/predictive.hpp"
#include "refcast/theory_mc.hpp"

namespace fs = std::filesystem;
using namespace refcast;

namespace {

struct RunOptions {
  std::string config;
  std::string preset;
  std::string forecasts, actuals, insample;
  std::string output_dir;
  std::string mode;
  std::vector<std::string> variants;
  std::vector<std::string> benchmarks;
  std::string headline;
  std::string prior_method;
  int workers = 0;
  long long seed = -1;
  int horizon = -1;
  bool predictive = false;
};

void add_run_options(CLI::App *cmd, RunOptions &o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration");
  cmd->add_option("--preset", o.preset, "Built-in protocol: m5 or spf");
  cmd->add_option("--forecasts", o.forecasts, "Forecast records CSV");
  cmd->add_option("--actuals", o.actuals, "Actual values CSV");
  cmd->add_option("--insample", o.insample, "In-sample history CSV");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory");
  cmd->add_option("--mode", o.mode, "fixed or varying expert pool");
  cmd->add_option("--variants", o.variants, "Model variants, e.g. identity-l2,log-entropy")->delimiter(',');
  cmd->add_option("--benchmarks", o.benchmarks, "Benchmark methods")->delimiter(',');
  cmd->add_option("--headline", o.headline, "average or validation_best");
  cmd->add_option("--prior-method", o.prior_method, "ccr or variance");
  cmd->add_option("-j,--workers", o.workers, "Worker threads");
  cmd->add_option("--seed", o.seed, "Solver seed");
  cmd->add_option("--horizon", o.horizon, "Test periods after T (0 = all)");
  cmd->add_flag("--predictive", o.predictive, "Add predictive mean, sd and quantiles");
}

RunConfig build_config(const RunOptions &o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.preset.empty()) apply_preset(cfg, o.preset);
  apply_environment(cfg);
  if (!o.forecasts.empty()) cfg.forecasts_csv = o.forecasts;
  if (!o.actuals.empty()) cfg.actuals_csv = o.actuals;
  if (!o.insample.empty()) cfg.insample_csv = o.insample;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.mode.empty()) {
    if (o.mode == "fixed") cfg.plan.mode = PoolMode::Fixed;
    else if (o.mode == "varying") cfg.plan.mode = PoolMode::Varying;
    else throw InputError("--mode must be fixed or varying");
  }
  if (!o.variants.empty()) {
    cfg.variants.clear();
    for (const auto &v : o.variants) cfg.variants.push_back(parse_variant(v));
  }
  if (!o.benchmarks.empty()) {
    cfg.benchmarks.clear();
    for (const auto &b : o.benchmarks) cfg.benchmarks.push_back(parse_benchmark(b));
  }
  if (!o.headline.empty()) {
    if (o.headline == "average") cfg.headline = HeadlineMode::AverageOfSix;
    else if (o.headline == "validation_best") cfg.headline = HeadlineMode::ValidationBest;
    else throw InputError("--headline must be average or validation_best");
  }
  if (!o.prior_method.empty()) {
    if (o.prior_method == "ccr") cfg.plan.prior_method = PriorMethod::CCR;
    else if (o.prior_method == "variance") cfg.plan.prior_method = PriorMethod::VarianceWeights;
    else throw InputError("--prior-method must be ccr or variance");
  }
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(o.seed);
    cfg.solver.seed = cfg.seed;
  }
  if (o.horizon >= 0) cfg.horizon = o.horizon;
  if (o.predictive) cfg.predictive = true;
  return cfg;
}

void print_summary(const PipelineResult &res, const std::string &dir) {
  std::cout << "wrote " << res.report.scores.size() << " scores to " << dir << "\n";
  for (const auto &a : res.report.aggregates) {
    std::cout << "  " << a.method << " avg RMSSE " << csv::format_double(a.mean_rmsse) << "\n";
  }
}

std::vector<double> parse_list(const std::string &s, const char *what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw InputError(std::string("bad number '") + item + "' in " + what);
    }
  }
  return out;
}

void write_file(const std::string &path, const std::function<void(std::ostream &)> &writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  writer(out);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Regularized ensemble forecasting"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto *run = app.add_subcommand("run", "Tune, forecast and evaluate every series");
  add_run_options(run, run_opts);

  RunOptions bench_opts;
  auto *bench = app.add_subcommand("bench", "Evaluate the benchmark combiners only");
  add_run_options(bench, bench_opts);

  RunOptions tune_opts;
  std::string tune_out;
  auto *tune = app.add_subcommand("tune", "Select lambda for every series and variant");
  add_run_options(tune, tune_opts);
  tune->add_option("--out", tune_out, "CSV destination (default stdout)");

  std::string w_mu, w_priors, w_variant = "identity-l2";
  double w_lambda = 0.0, w_sigma2 = 0.0;
  std::optional<double> w_mu_bar;
  bool w_predictive = false;
  auto *weights = app.add_subcommand("weights", "Solve once and print w*, penalty share and objective parts");
  weights->add_option("--mu", w_mu, "Current forecasts, comma separated")->required();
  weights->add_option("--priors", w_priors, "Prior weights (default uniform)");
  weights->add_option("--variant", w_variant, "Model variant");
  weights->add_option("--lambda", w_lambda, "Penalty strength");
  weights->add_option("--sigma2", w_sigma2, "Known variance for shifted-log variants");
  weights->add_option("--mu-bar", w_mu_bar, "Expected forecast (default: mean of --mu)");
  weights->add_flag("--predictive", w_predictive, "Include the predictive distribution");

  IllustrationConfig ill_cfg;
  std::string ill_variant = "identity-l2", ill_prefix = "illustrate";
  auto *illus = app.add_subcommand("illustrate", "Two-expert contour grid and lambda path");
  illus->add_option("--variant", ill_variant, "Model variant");
  illus->add_option("--lambda", ill_cfg.lambda, "Lambda for the contour grid");
  illus->add_option("--mu2", ill_cfg.mu2, "Fixed forecast of expert 2");
  illus->add_option("--grid", ill_cfg.grid, "Grid size per axis");
  illus->add_option("--seed", ill_cfg.seed, "Seed for drawn forecasts");
  illus->add_option("-o,--output", ill_prefix, "Prefix for <prefix>_contour.csv and <prefix>_path.csv");

  RateExperiment sim;
  std::string sim_variant = "identity-l2", sim_k, sim_out;
  bool sim_simple = false;
  auto *simulate = app.add_subcommand("simulate", "Monte Carlo MSPE rate experiment");
  simulate->add_option("--variant", sim_variant, "identity-l2, identity-entropy, log-l2 or log-entropy");
  simulate->add_option("--k", sim_k, "Expert counts, comma separated (default 10,40,160)");
  simulate->add_option("--replications", sim.replications, "Replications per k");
  simulate->add_option("--sigma-y", sim.sigma_y, "Target noise sd");
  simulate->add_option("--sigma0", sim.sigma0, "Forecast sd");
  simulate->add_option("--c", sim.c, "Constant in the lambda order");
  simulate->add_option("--seed", sim.seed, "Base seed");
  simulate->add_option("-j,--workers", sim.workers, "Worker threads");
  simulate->add_flag("--simple-mean", sim_simple, "Simulate the simple mean instead");
  simulate->add_option("--out", sim_out, "CSV destination (default stdout)");

  int syn_series = 3, syn_k = 5, syn_periods = 28;
  SyntheticConfig syn;
  std::string syn_dir = "synthetic";
  std::string syn_preset = "m5";
  auto *synth = app.add_subcommand("synth", "Write a synthetic panel fixture and matching config");
  synth->add_option("--series", syn_series, "Number of series");
  synth->add_option("--k", syn_k, "Experts per series");
  synth->add_option("--periods", syn_periods, "Forecast periods per series");
  synth->add_option("--rho", syn.rho, "Common error correlation");
  synth->add_option("--missing-rate", syn.missing_rate, "Probability of a missing forecast");
  synth->add_option("--seed", syn.seed, "Seed");
  synth->add_option("--preset", syn_preset, "Preset recorded in config.json");
  synth->add_option("-o,--output-dir", syn_dir, "Destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run || *bench) {
      const bool is_run = static_cast<bool>(*run);
      const auto cfg = build_config(is_run ? run_opts : bench_opts);
      const auto res = run_pipeline(cfg, is_run);
      print_summary(res, cfg.output_dir);
    } else if (*tune) {
      auto cfg = build_config(tune_opts);
      cfg.validate();
      const auto panels = load_panels(cfg.forecasts_csv, cfg.actuals_csv, cfg.insample_csv);
      const auto rows = tune_panels(panels, cfg);
      write_file(tune_out, [&](std::ostream &out) {
        csv::write_row(out, {"series_id", "test_period", "variant", "lambda_star", "validation_score"});
        for (const auto &r : rows) {
          csv::write_row(out, {r.series_id, r.test_period == 0 ? "all" : std::to_string(r.test_period), r.variant,
                               csv::format_double(r.lambda_star), csv::format_double(r.score)});
        }
      });
    } else if (*weights) {
      const auto mu = parse_list(w_mu, "--mu");
      ModelSpec spec;
      const auto v = parse_variant(w_variant);
      spec.transform = v.transform;
      spec.penalty = v.penalty;
      spec.lambda = w_lambda;
      spec.sigma2 = w_sigma2;
      spec.priors = w_priors.empty() ? std::vector<double>(mu.size(), 1.0 / static_cast<double>(mu.size()))
                                     : parse_list(w_priors, "--priors");
      spec.mu_bar = w_mu_bar.value_or(consensus_mean(mu));
      const auto w = solve(mu, spec);
      nlohmann::json j;
      j["variant"] = variant_name(v);
      j["weights"] = w.weights;
      j["objective"] = w.objective_value;
      j["variance_term"] = w.variance_term;
      j["penalty_term"] = w.penalty_term;
      j["penalty_share"] = penalty_share(w);
      j["converged"] = w.converged;
      j["iterations"] = w.iterations;
      double point = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) point += w.weights[i] * mu[i];
      j["forecast"] = point;
      if (w_predictive) {
        const auto dist = make_predictive(predictive_spec_for(spec, w.weights, mu));
        j["predictive"] = {{"mean", dist->mean()}, {"sd", dist->sd()}, {"q05", dist->quantile(0.05)},
                           {"q95", dist->quantile(0.95)}};
      }
      std::cout << j.dump(2) << "\n";
    } else if (*illus) {
      ill_cfg.variant = parse_variant(ill_variant);
      const auto ill = illustrate(ill_cfg);
      write_file(ill_prefix + "_contour.csv", [&](std::ostream &o) { write_contour_csv(o, ill); });
      write_file(ill_prefix + "_path.csv", [&](std::ostream &o) { write_path_csv(o, ill); });
      std::cout << "wrote " << ill_prefix << "_contour.csv and " << ill_prefix << "_path.csv\n";
    } else if (*simulate) {
      if (!sim_k.empty()) {
        sim.k_grid.clear();
        for (double k : parse_list(sim_k, "--k")) sim.k_grid.push_back(static_cast<int>(k));
      }
      sim.variant = parse_variant(sim_variant);
      const auto res = sim_simple ? mspe_simple_mean(sim) : mspe_ref(sim);
      write_file(sim_out, [&](std::ostream &out) {
        csv::write_row(out, {"k", "lambda", "mspe", "se", "excess", "slope"});
        for (const auto &p : res.points) {
          csv::write_row(out, {std::to_string(p.k), csv::format_double(p.lambda), csv::format_double(p.mspe),
                               csv::format_double(p.se), csv::format_double(p.excess),
                               csv::format_double(res.slope)});
        }
      });
    } else if (*synth) {
      if (syn_series < 1) throw InputError("--series must be >= 1");
      fs::create_directories(syn_dir);
      std::vector<ForecastPanel> panels;
      for (int s = 0; s < syn_series; ++s) {
        SyntheticConfig c = syn;
        c.series_id = "s" + std::to_string(s + 1);
        c.seed = syn.seed + static_cast<std::uint64_t>(s);
        panels.push_back(generate_synthetic(static_cast<std::size_t>(syn_k), syn_periods, c));
      }
      const auto dir = fs::path(syn_dir);
      write_panels(panels, (dir / "forecasts.csv").string(), (dir / "actuals.csv").string(),
                   (dir / "insample.csv").string());
      nlohmann::json j;
      j["preset"] = syn_preset;
      j["inputs"] = {{"forecasts", "forecasts.csv"}, {"actuals", "actuals.csv"}, {"insample", "insample.csv"}};
      j["output_dir"] = "out";
      j["seed"] = syn.seed;
      std::ofstream(dir / "config.json") << j.dump(2) << "\n";
      std::cout << "wrote " << syn_series << " series to " << syn_dir << "\n";
    }
  } catch (const InputError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
