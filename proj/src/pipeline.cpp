#include "refcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "refcast/csv.hpp"
#include "refcast/error.hpp"
#include "refcast/predictive.hpp"

namespace refcast {

namespace fs = std::filesystem;

std::string ref_variant_method(Variant v) { return "REF[" + variant_name(v) + "]"; }

std::vector<Period> test_periods(const ForecastPanel &panel, const RunConfig &cfg) {
  const Period first = cfg.plan.T + 1;
  Period last = panel.last_period();
  if (cfg.horizon > 0) {
    last = std::min(last, cfg.plan.T + cfg.horizon);
  }
  if (first > last) {
    throw InputError("series '" + panel.series_id() + "' has no periods after T=" + std::to_string(cfg.plan.T));
  }
  std::vector<Period> out;
  for (Period t = first; t <= last; ++t) {
    out.push_back(t);
  }
  return out;
}

namespace {

struct SeriesOutcome {
  std::vector<MethodScore> scores;
  std::vector<PenaltyShareRecord> shares;
  std::vector<ForecastRow> forecasts;
  std::vector<TuningRow> tuning;
};

// Re-raises a module error with the series (and period) prefixed, keeping the
// error category so the CLI exit code is preserved.
[[noreturn]] void rethrow_located(const std::string &where) {
  try {
    throw;
  } catch (const InputError &e) {
    throw InputError(where + ": " + e.what());
  } catch (const DomainError &e) {
    throw DomainError(where + ": " + e.what());
  } catch (const NumericalError &e) {
    throw NumericalError(where + ": " + e.what());
  } catch (const std::exception &e) {
    throw Error(where + ": " + e.what());
  }
}

std::optional<PredictiveSummary> summarize_predictive(const ModelSpec &spec, const WeightVector &w,
                                                      std::span<const double> mu, const RunConfig &cfg) {
  try {
    const auto ps = predictive_spec_for(spec, w.weights, mu, cfg.predictive_m, cfg.predictive_a);
    const auto dist = make_predictive(ps);
    PredictiveSummary s{dist->mean(), dist->sd(), dist->quantile(0.05), dist->quantile(0.5), dist->quantile(0.95)};
    if (!std::isfinite(s.sd) || !std::isfinite(s.q05) || !std::isfinite(s.q95)) {
      return std::nullopt;
    }
    return s;
  } catch (const Error &) {
    return std::nullopt;
  }
}

struct VariantForecast {
  double forecast = 0.0;
  WeightVector weights;
  ModelSpec spec;
  std::vector<double> mu;
  double validation_score = 0.0;
};

VariantForecast forecast_variant(const ForecastPanel &panel, Period t, Variant v, const TuningResult &tuned,
                                 const RunConfig &cfg) {
  const auto &plan = cfg.plan;
  const Period first = plan.mode == PoolMode::Fixed ? plan.T - plan.l + 1 : t - plan.l;
  const Period last = plan.mode == PoolMode::Fixed ? plan.T : t - 1;
  const auto in = period_inputs(panel, tuned.pool, t, first, last, plan);
  VariantForecast out;
  out.spec = make_spec(v, tuned.lambda_star, in);
  out.weights = solve_ensemble(in.mu, out.spec, cfg.solver);
  out.mu = in.mu;
  for (std::size_t r = 0; r < in.mu.size(); ++r) {
    out.forecast += out.weights.weights[r] * in.mu[r];
  }
  out.validation_score = tuned.best_score();
  return out;
}

void check_fixed_pool(const ForecastPanel &panel, std::span<const Period> tests) {
  for (auto t : tests) {
    for (std::size_t i = 0; i < panel.expert_count(); ++i) {
      if (!panel.has_forecast(i, t)) {
        throw InputError("fixed pool requires every expert at test period " + std::to_string(t) +
                         " (expert '" + panel.experts()[i] + "' is missing); use the varying mode");
      }
    }
  }
}

SeriesOutcome process_series(const ForecastPanel &panel, const RunConfig &cfg, bool include_ref) {
  SeriesOutcome out;
  const auto &sid = panel.series_id();
  const auto tests = test_periods(panel, cfg);
  std::map<std::string, std::vector<double>> method_forecasts;
  auto add_forecast = [&](Period t, const std::string &method, double f, std::optional<PredictiveSummary> p) {
    out.forecasts.push_back({sid, t, method, f, panel.actual(t), p});
    method_forecasts[method].push_back(f);
  };

  if (include_ref) {
    std::vector<TuningResult> fixed_tuning;
    if (cfg.plan.mode == PoolMode::Fixed) {
      check_fixed_pool(panel, tests);
      for (auto v : cfg.variants) {
        fixed_tuning.push_back(tune_fixed(panel, v, cfg.plan, cfg.solver));
        const auto &tr = fixed_tuning.back();
        out.tuning.push_back({sid, 0, variant_name(v), tr.lambda_star, tr.best_score(), tr.ties_broken});
      }
    }
    for (auto t : tests) {
      try {
        std::vector<VariantForecast> vf;
        for (std::size_t j = 0; j < cfg.variants.size(); ++j) {
          const auto v = cfg.variants[j];
          TuningResult tuned;
          if (cfg.plan.mode == PoolMode::Fixed) {
            tuned = fixed_tuning[j];
          } else {
            tuned = tune_varying(panel, t, v, cfg.plan, cfg.solver);
            out.tuning.push_back({sid, t, variant_name(v), tuned.lambda_star, tuned.best_score(), tuned.ties_broken});
          }
          vf.push_back(forecast_variant(panel, t, v, tuned, cfg));
          const auto &f = vf.back();
          std::optional<PredictiveSummary> pred;
          if (cfg.predictive) {
            pred = summarize_predictive(f.spec, f.weights, f.mu, cfg);
          }
          add_forecast(t, ref_variant_method(v), f.forecast, pred);
          out.shares.push_back({sid, t, variant_name(v), tuned.lambda_star, penalty_share(f.weights), PsBin::Low});
        }
        double headline = 0.0;
        if (cfg.headline == HeadlineMode::AverageOfSix) {
          for (const auto &f : vf) {
            headline += f.forecast;
          }
          headline /= static_cast<double>(vf.size());
        } else {
          std::size_t best = 0;
          for (std::size_t j = 1; j < vf.size(); ++j) {
            if (vf[j].validation_score < vf[best].validation_score) {
              best = j;
            }
          }
          headline = vf[best].forecast;
        }
        add_forecast(t, "REF", headline, std::nullopt);
      } catch (...) {
        rethrow_located("period " + std::to_string(t));
      }
    }
  }

  for (auto m : cfg.benchmarks) {
    for (auto t : tests) {
      try {
        const Period origin = cfg.plan.mode == PoolMode::Fixed ? cfg.plan.T : t - 1;
        BenchmarkSpec spec = cfg.benchmark_params;
        spec.l = cfg.plan.l;
        add_forecast(t, benchmark_name(m), benchmark_forecast(m, panel, t, origin, spec), std::nullopt);
      } catch (...) {
        rethrow_located(benchmark_name(m) + " at period " + std::to_string(t));
      }
    }
  }

  std::vector<double> actuals;
  for (auto t : tests) {
    actuals.push_back(panel.actual(t));
  }
  const bool any_actual = std::any_of(actuals.begin(), actuals.end(), [](double y) { return !is_missing(y); });
  if (any_actual) {
    const double scale = naive_scale(panel.insample(), sid);
    for (const auto &[method, f] : method_forecasts) {
      MethodScore s;
      s.series_id = sid;
      s.method = method;
      s.rmse = rmse(f, actuals);
      s.rmsse = s.rmse / scale;
      s.periods = static_cast<std::size_t>(std::count_if(actuals.begin(), actuals.end(),
                                                         [](double y) { return !is_missing(y); }));
      out.scores.push_back(s);
    }
  }
  return out;
}

template <class Fn>
std::vector<SeriesOutcome> map_series(std::span<const ForecastPanel> panels, int workers, Fn fn) {
  std::vector<SeriesOutcome> results(panels.size());
  std::vector<std::exception_ptr> errors(panels.size());
  auto body = [&](std::size_t i) {
    try {
      results[i] = fn(panels[i]);
    } catch (...) {
      try {
        rethrow_located("series '" + panels[i].series_id() + "'");
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(workers), panels.size()));
  if (w <= 1) {
    for (std::size_t i = 0; i < panels.size(); ++i) {
      body(i);
    }
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < w; ++t) {
      threads.emplace_back([&, t]() {
        for (std::size_t i = t; i < panels.size(); i += w) {
          body(i);
        }
      });
    }
    for (auto &th : threads) {
      th.join();
    }
  }
  // First failing series in key order, independent of scheduling.
  for (auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

} // namespace

PipelineResult evaluate_panels(std::span<const ForecastPanel> panels, const RunConfig &cfg, bool include_ref) {
  if (panels.empty()) {
    throw InputError("no series to evaluate");
  }
  auto outcomes = map_series(panels, cfg.workers,
                             [&](const ForecastPanel &p) { return process_series(p, cfg, include_ref); });
  PipelineResult res;
  res.report.reference_method = include_ref ? "REF" : "";
  for (auto m : cfg.benchmarks) {
    res.report.benchmarks.push_back(benchmark_name(m));
  }
  for (auto &o : outcomes) {
    res.report.scores.insert(res.report.scores.end(), o.scores.begin(), o.scores.end());
    res.report.shares.insert(res.report.shares.end(), o.shares.begin(), o.shares.end());
    res.forecasts.insert(res.forecasts.end(), o.forecasts.begin(), o.forecasts.end());
    res.tuning.insert(res.tuning.end(), o.tuning.begin(), o.tuning.end());
  }
  res.report.finalize();
  std::stable_sort(res.forecasts.begin(), res.forecasts.end(), [](const ForecastRow &a, const ForecastRow &b) {
    return std::tie(a.series_id, a.period, a.method) < std::tie(b.series_id, b.period, b.method);
  });
  std::stable_sort(res.tuning.begin(), res.tuning.end(), [](const TuningRow &a, const TuningRow &b) {
    return std::tie(a.series_id, a.test_period, a.variant) < std::tie(b.series_id, b.test_period, b.variant);
  });
  return res;
}

std::vector<TuningRow> tune_panels(std::span<const ForecastPanel> panels, const RunConfig &cfg) {
  auto outcomes = map_series(panels, cfg.workers, [&](const ForecastPanel &panel) {
    SeriesOutcome o;
    if (cfg.plan.mode == PoolMode::Fixed) {
      for (auto v : cfg.variants) {
        const auto tr = tune_fixed(panel, v, cfg.plan, cfg.solver);
        o.tuning.push_back({panel.series_id(), 0, variant_name(v), tr.lambda_star, tr.best_score(), tr.ties_broken});
      }
    } else {
      for (auto t : test_periods(panel, cfg)) {
        for (auto v : cfg.variants) {
          const auto tr = tune_varying(panel, t, v, cfg.plan, cfg.solver);
          o.tuning.push_back({panel.series_id(), t, variant_name(v), tr.lambda_star, tr.best_score(), tr.ties_broken});
        }
      }
    }
    return o;
  });
  std::vector<TuningRow> rows;
  for (auto &o : outcomes) {
    rows.insert(rows.end(), o.tuning.begin(), o.tuning.end());
  }
  return rows;
}

const std::vector<std::string> &output_files() {
  static const std::vector<std::string> files{"report.csv", "report.json", "forecasts.csv", "penalty_share.csv",
                                              "tuning.csv"};
  return files;
}

namespace {

void write_forecasts(std::ostream &out, const std::vector<ForecastRow> &rows, bool predictive) {
  using csv::format_double;
  std::vector<std::string> header{"series_id", "period", "method", "forecast", "actual"};
  if (predictive) {
    for (const char *h : {"pred_mean", "pred_sd", "pred_q05", "pred_q50", "pred_q95"}) {
      header.emplace_back(h);
    }
  }
  csv::write_row(out, header);
  for (const auto &r : rows) {
    std::vector<std::string> f{r.series_id, std::to_string(r.period), r.method, format_double(r.forecast),
                               format_double(r.actual)};
    if (predictive) {
      if (r.predictive) {
        const auto &p = *r.predictive;
        for (double v : {p.mean, p.sd, p.q05, p.q50, p.q95}) {
          f.push_back(format_double(v));
        }
      } else {
        f.insert(f.end(), 5, "");
      }
    }
    csv::write_row(out, f);
  }
}

void write_tuning(std::ostream &out, const std::vector<TuningRow> &rows) {
  csv::write_row(out, {"series_id", "test_period", "variant", "lambda_star", "validation_score", "ties_broken"});
  for (const auto &r : rows) {
    csv::write_row(out, {r.series_id, r.test_period == 0 ? "all" : std::to_string(r.test_period), r.variant,
                         csv::format_double(r.lambda_star), csv::format_double(r.score),
                         r.ties_broken ? "true" : "false"});
  }
}

} // namespace

void write_outputs(const PipelineResult &result, const std::string &dir, bool predictive_columns) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create output directory '" + dir + "': " + ec.message());
  }
  std::vector<fs::path> staged, finals;
  auto cleanup = [&]() {
    for (const auto &p : staged) {
      fs::remove(p, ec);
    }
    for (const auto &p : finals) {
      fs::remove(p, ec);
    }
  };
  try {
    auto stage = [&](const std::string &name, auto &&writer) {
      const fs::path tmp = fs::path(dir) / (name + ".tmp");
      staged.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary);
      if (!out) {
        throw Error("cannot write '" + tmp.string() + "'");
      }
      writer(out);
      out.close();
      if (!out) {
        throw Error("write failed for '" + tmp.string() + "'");
      }
    };
    stage("report.csv", [&](std::ostream &o) { result.report.write_csv(o); });
    stage("report.json", [&](std::ostream &o) { result.report.write_json(o); });
    stage("forecasts.csv", [&](std::ostream &o) { write_forecasts(o, result.forecasts, predictive_columns); });
    stage("penalty_share.csv", [&](std::ostream &o) { result.report.write_penalty_shares(o); });
    stage("tuning.csv", [&](std::ostream &o) { write_tuning(o, result.tuning); });
    for (std::size_t i = 0; i < staged.size(); ++i) {
      const fs::path final_path = fs::path(dir) / output_files()[i];
      fs::rename(staged[i], final_path);
      finals.push_back(final_path);
    }
    staged.clear();
  } catch (...) {
    cleanup();
    throw;
  }
}

PipelineResult run_pipeline(const RunConfig &cfg, bool include_ref) {
  cfg.validate();
  const auto panels = load_panels(cfg.forecasts_csv, cfg.actuals_csv, cfg.insample_csv);
  auto result = evaluate_panels(panels, cfg, include_ref);
  write_outputs(result, cfg.output_dir, cfg.predictive && include_ref);
  return result;
}

} // namespace refcast
