#include "refcast/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "refcast/error.hpp"

namespace refcast {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig::RunConfig() {
  variants.assign(all_variants().begin(), all_variants().end());
  benchmarks.assign(all_benchmarks().begin(), all_benchmarks().end());
}

void RunConfig::validate() const {
  plan.validate();
  benchmark_params.validate();
  solver.validate();
  if (variants.empty()) {
    throw InputError("config: at least one model variant is required");
  }
  if (horizon < 0) {
    throw InputError("config: horizon must be >= 0");
  }
  if (workers < 1) {
    throw InputError("config: workers must be >= 1");
  }
  if (predictive && (!(predictive_m > 0.0) || !(predictive_a > 1.0))) {
    throw InputError("config: predictive output needs m > 0 and a > 1");
  }
  for (const auto *p : {&forecasts_csv, &actuals_csv, &insample_csv}) {
    if (p->empty()) {
      throw InputError("config: input paths for forecasts, actuals and insample are required");
    }
    if (!fs::is_regular_file(*p)) {
      throw InputError("config: input file not found: " + *p);
    }
  }
}

void apply_preset(RunConfig &cfg, const std::string &name) {
  const auto p = preset_plan(name);
  cfg.plan.T = p.T;
  cfg.plan.l = p.l;
  cfg.plan.mode = p.mode;
  cfg.horizon = name == "m5" ? 7 : 0;
}

namespace {

void reject_unknown(const json &j, const std::set<std::string> &allowed, const std::string &where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw InputError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <class T>
T get(const json &j, const char *key, const std::string &where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InputError(std::string("config: bad value for '") + key + "' in " + where);
  }
}

std::string resolve(const std::string &path, const std::string &base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) {
    return path;
  }
  return (fs::path(base) / path).lexically_normal().string();
}

PoolMode parse_mode(const std::string &s) {
  if (s == "fixed") {
    return PoolMode::Fixed;
  }
  if (s == "varying") {
    return PoolMode::Varying;
  }
  throw InputError("config: mode must be 'fixed' or 'varying'");
}

} // namespace

RunConfig parse_run_config(const std::string &json_text, const std::string &base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw InputError("config: top level must be an object");
  }
  reject_unknown(j,
                 {"preset", "inputs", "mode", "tuning", "horizon", "variants", "benchmarks", "benchmark_params",
                  "headline", "prior_method", "predictive", "solver", "output_dir", "seed", "workers"},
                 "config");
  RunConfig cfg;
  if (j.contains("preset")) {
    apply_preset(cfg, get<std::string>(j, "preset", "config"));
  }
  if (j.contains("inputs")) {
    const auto &in = j["inputs"];
    reject_unknown(in, {"forecasts", "actuals", "insample"}, "inputs");
    if (in.contains("forecasts")) cfg.forecasts_csv = resolve(get<std::string>(in, "forecasts", "inputs"), base_dir);
    if (in.contains("actuals")) cfg.actuals_csv = resolve(get<std::string>(in, "actuals", "inputs"), base_dir);
    if (in.contains("insample")) cfg.insample_csv = resolve(get<std::string>(in, "insample", "inputs"), base_dir);
  }
  if (j.contains("mode")) {
    cfg.plan.mode = parse_mode(get<std::string>(j, "mode", "config"));
  }
  if (j.contains("tuning")) {
    const auto &t = j["tuning"];
    reject_unknown(t, {"T", "l", "lambda_grid", "metric", "sigma2_form"}, "tuning");
    if (t.contains("T")) cfg.plan.T = get<int>(t, "T", "tuning");
    if (t.contains("l")) cfg.plan.l = get<int>(t, "l", "tuning");
    if (t.contains("lambda_grid")) cfg.plan.lambda_grid = get<std::vector<double>>(t, "lambda_grid", "tuning");
    if (t.contains("metric")) {
      const auto m = get<std::string>(t, "metric", "tuning");
      if (m == "rmsse") {
        cfg.plan.metric = AccuracyMetric::RMSSE;
      } else if (m == "rmse") {
        cfg.plan.metric = AccuracyMetric::RMSE;
      } else {
        throw InputError("config: tuning.metric must be 'rmsse' or 'rmse'");
      }
    }
    if (t.contains("sigma2_form")) {
      const auto m = get<std::string>(t, "sigma2_form", "tuning");
      if (m == "uncentered") {
        cfg.plan.sigma2_form = Sigma2Form::Uncentered;
      } else if (m == "centered") {
        cfg.plan.sigma2_form = Sigma2Form::Centered;
      } else {
        throw InputError("config: tuning.sigma2_form must be 'uncentered' or 'centered'");
      }
    }
  }
  if (j.contains("horizon")) cfg.horizon = get<int>(j, "horizon", "config");
  if (j.contains("variants")) {
    cfg.variants.clear();
    for (const auto &name : get<std::vector<std::string>>(j, "variants", "config")) {
      cfg.variants.push_back(parse_variant(name));
    }
  }
  if (j.contains("benchmarks")) {
    cfg.benchmarks.clear();
    for (const auto &name : get<std::vector<std::string>>(j, "benchmarks", "config")) {
      cfg.benchmarks.push_back(parse_benchmark(name));
    }
  }
  if (j.contains("benchmark_params")) {
    const auto &b = j["benchmark_params"];
    reject_unknown(b, {"trim_fraction", "winsor_fraction", "ridge_alphas", "fit_intercept"}, "benchmark_params");
    auto &p = cfg.benchmark_params;
    if (b.contains("trim_fraction")) p.trim_fraction = get<double>(b, "trim_fraction", "benchmark_params");
    if (b.contains("winsor_fraction")) p.winsor_fraction = get<double>(b, "winsor_fraction", "benchmark_params");
    if (b.contains("ridge_alphas")) p.ridge_alphas = get<std::vector<double>>(b, "ridge_alphas", "benchmark_params");
    if (b.contains("fit_intercept")) p.fit_intercept = get<bool>(b, "fit_intercept", "benchmark_params");
  }
  if (j.contains("headline")) {
    const auto h = get<std::string>(j, "headline", "config");
    if (h == "average") {
      cfg.headline = HeadlineMode::AverageOfSix;
    } else if (h == "validation_best") {
      cfg.headline = HeadlineMode::ValidationBest;
    } else {
      throw InputError("config: headline must be 'average' or 'validation_best'");
    }
  }
  if (j.contains("prior_method")) {
    const auto m = get<std::string>(j, "prior_method", "config");
    if (m == "ccr") {
      cfg.plan.prior_method = PriorMethod::CCR;
    } else if (m == "variance") {
      cfg.plan.prior_method = PriorMethod::VarianceWeights;
    } else {
      throw InputError("config: prior_method must be 'ccr' or 'variance'");
    }
  }
  if (j.contains("predictive")) {
    const auto &p = j["predictive"];
    reject_unknown(p, {"enabled", "m", "a"}, "predictive");
    if (p.contains("enabled")) cfg.predictive = get<bool>(p, "enabled", "predictive");
    if (p.contains("m")) cfg.predictive_m = get<double>(p, "m", "predictive");
    if (p.contains("a")) cfg.predictive_a = get<double>(p, "a", "predictive");
  }
  if (j.contains("solver")) {
    const auto &s = j["solver"];
    reject_unknown(s, {"max_iterations", "grad_tolerance", "restarts"}, "solver");
    if (s.contains("max_iterations")) cfg.solver.max_iterations = get<int>(s, "max_iterations", "solver");
    if (s.contains("grad_tolerance")) cfg.solver.grad_tolerance = get<double>(s, "grad_tolerance", "solver");
    if (s.contains("restarts")) cfg.solver.restarts = get<int>(s, "restarts", "solver");
  }
  if (j.contains("output_dir")) cfg.output_dir = resolve(get<std::string>(j, "output_dir", "config"), base_dir);
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed", "config");
  if (j.contains("workers")) cfg.workers = get<int>(j, "workers", "config");
  cfg.solver.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("config file not found: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path().string());
}

void apply_environment(RunConfig &cfg) {
  if (const char *dir = std::getenv("REFCAST_OUTPUT_DIR"); dir && *dir) {
    cfg.output_dir = dir;
  }
  if (const char *w = std::getenv("REFCAST_WORKERS"); w && *w) {
    char *end = nullptr;
    const long n = std::strtol(w, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) {
      throw InputError("REFCAST_WORKERS must be a positive integer");
    }
    cfg.workers = static_cast<int>(n);
  }
}

std::string dump_run_config(const RunConfig &cfg) {
  json j;
  j["inputs"] = {{"forecasts", cfg.forecasts_csv}, {"actuals", cfg.actuals_csv}, {"insample", cfg.insample_csv}};
  j["mode"] = cfg.plan.mode == PoolMode::Fixed ? "fixed" : "varying";
  j["tuning"] = {{"T", cfg.plan.T},
                 {"l", cfg.plan.l},
                 {"lambda_grid", cfg.plan.lambda_grid},
                 {"metric", cfg.plan.metric == AccuracyMetric::RMSSE ? "rmsse" : "rmse"},
                 {"sigma2_form", cfg.plan.sigma2_form == Sigma2Form::Uncentered ? "uncentered" : "centered"}};
  j["horizon"] = cfg.horizon;
  std::vector<std::string> v, b;
  for (auto x : cfg.variants) v.push_back(variant_name(x));
  for (auto x : cfg.benchmarks) b.push_back(benchmark_name(x));
  j["variants"] = v;
  j["benchmarks"] = b;
  j["benchmark_params"] = {{"trim_fraction", cfg.benchmark_params.trim_fraction},
                           {"winsor_fraction", cfg.benchmark_params.winsor_fraction},
                           {"ridge_alphas", cfg.benchmark_params.ridge_alphas},
                           {"fit_intercept", cfg.benchmark_params.fit_intercept}};
  j["headline"] = cfg.headline == HeadlineMode::AverageOfSix ? "average" : "validation_best";
  j["prior_method"] = cfg.plan.prior_method == PriorMethod::VarianceWeights ? "variance" : "ccr";
  j["predictive"] = {{"enabled", cfg.predictive}, {"m", cfg.predictive_m}, {"a", cfg.predictive_a}};
  j["solver"] = {{"max_iterations", cfg.solver.max_iterations},
                 {"grad_tolerance", cfg.solver.grad_tolerance},
                 {"restarts", cfg.solver.restarts}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  return j.dump(2) + "\n";
}

} // namespace refcast
