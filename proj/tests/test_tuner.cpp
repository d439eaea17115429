#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "refcast/error.hpp"
#include "refcast/tuner.hpp"

using namespace refcast;
using fixture::NA;

namespace {

TuningPlan small_plan(PoolMode mode = PoolMode::Fixed) {
  TuningPlan p;
  p.T = 12;
  p.l = 6;
  p.lambda_grid = {0.0, 0.1, 10.0, 1000.0};
  p.mode = mode;
  return p;
}

ForecastPanel synthetic(std::uint64_t seed, double missing = 0.0, int periods = 16) {
  SyntheticConfig cfg;
  cfg.rho = 0.3;
  cfg.seed = seed;
  cfg.missing_rate = missing;
  return generate_synthetic(4, periods, cfg);
}

} // namespace

TEST_CASE("plan validation and presets") {
  TuningPlan p;
  CHECK(p.lambda_grid.size() == 20);
  CHECK(p.lambda_grid.front() == 0.0);
  CHECK(p.lambda_grid[1] == doctest::Approx(1e-3));
  CHECK(p.lambda_grid.back() == doctest::Approx(1e6));
  p.validate();
  p.T = p.l;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = TuningPlan{};
  p.lambda_grid = {0.1, 1.0};
  CHECK_THROWS_AS(p.validate(), InputError);
  p.lambda_grid = {0.0, 1.0, 1.0};
  CHECK_THROWS_AS(p.validate(), InputError);
  const auto m5 = preset_plan("m5");
  CHECK(m5.T == 21);
  CHECK(m5.l == 14);
  CHECK(m5.mode == PoolMode::Fixed);
  const auto spf = preset_plan("spf");
  CHECK(spf.T == 16);
  CHECK(spf.l == 8);
  CHECK(spf.mode == PoolMode::Varying);
  CHECK_THROWS_AS(preset_plan("m4"), InputError);
}

TEST_CASE("singleton grid") {
  auto plan = small_plan();
  plan.lambda_grid = {0.0};
  const auto r = tune_fixed(synthetic(1), {Transform::Log, Penalty::Entropy}, plan);
  CHECK(r.lambda_star == 0.0);
  CHECK(r.per_lambda_scores.size() == 1);
  CHECK_FALSE(r.ties_broken);
}

TEST_CASE("fixed tuning shape and determinism") {
  const auto p = synthetic(2);
  const auto plan = small_plan();
  for (auto v : all_variants()) {
    const auto a = tune_fixed(p, v, plan);
    const auto b = tune_fixed(p, v, plan);
    CHECK(a.per_lambda_scores == b.per_lambda_scores);
    CHECK(a.lambda_star == b.lambda_star);
    CHECK(a.per_lambda_scores.size() == plan.lambda_grid.size());
    REQUIRE(a.validation_periods.size() == 6);
    CHECK(a.validation_periods.front() == 7);
    CHECK(a.validation_periods.back() == 12);
    for (double s : a.per_lambda_scores) CHECK(s >= a.best_score());
  }
}

TEST_CASE("rmse metric ignores the naive scale") {
  const auto p = synthetic(3);
  auto plan = small_plan();
  const auto a = tune_fixed(p, {Transform::Identity, Penalty::L2}, plan);
  plan.metric = AccuracyMetric::RMSE;
  const auto b = tune_fixed(p, {Transform::Identity, Penalty::L2}, plan);
  CHECK(a.lambda_star == b.lambda_star);
  const double ratio = b.per_lambda_scores[0] / a.per_lambda_scores[0];
  for (std::size_t g = 1; g < a.per_lambda_scores.size(); ++g)
    CHECK(b.per_lambda_scores[g] / a.per_lambda_scores[g] == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("fixed tuning errors") {
  const auto p = synthetic(4, 0.0, 10);
  CHECK_THROWS_AS(tune_fixed(p, {Transform::Identity, Penalty::L2}, small_plan()), InputError);
  auto d = synthetic(4).data();
  for (std::size_t j = 11; j < d.actuals.size(); ++j) d.actuals[j] = NA;
  CHECK_THROWS_AS(tune_fixed(ForecastPanel(d), {Transform::Identity, Penalty::L2}, small_plan()), InputError);
}

TEST_CASE("varying reduces to fixed without missing cells") {
  const auto p = synthetic(5);
  for (auto v : all_variants()) {
    const auto f = tune_fixed(p, v, small_plan());
    const auto g = tune_varying(p, 13, v, small_plan(PoolMode::Varying));
    CHECK(f.validation_periods == g.validation_periods);
    CHECK(f.per_lambda_scores == g.per_lambda_scores);
    CHECK(f.lambda_star == g.lambda_star);
  }
}

TEST_CASE("pooled forecasts impute the cross-sectional mean") {
  const double sentinel = 1234.5;
  const auto p = fixture::panel({{1, 2, 3, 4}, {5, 6, 7, 8}, {sentinel, NA, 11, 12}, {NA, 100, NA, NA}},
                                {1, 2, 3, 4});
  const std::vector<std::size_t> pool{0, 1, 2};
  auto mu = pooled_forecasts(p, pool, 2);
  CHECK(mu == std::vector<double>{2.0, 6.0, 4.0});
  const auto w = pooled_window(p, pool, 1, 3);
  CHECK(w.forecasts[2] == std::vector<double>{sentinel, 4.0, 11.0});
  const std::vector<std::size_t> lone{3};
  mu = pooled_forecasts(p, lone, 1);
  CHECK(mu[0] == doctest::Approx((1.0 + 5.0 + sentinel) / 3.0));
}

TEST_CASE("expert without window history keeps an imputed prior") {
  // e3 starts reporting at period 5.
  std::vector<double> e1, e2, e3, y;
  for (int t = 1; t <= 12; ++t) {
    y.push_back(t);
    e1.push_back(t + 0.5 * ((t % 3) - 1));
    e2.push_back(t - 0.8 * ((t % 2) - 0.5));
    e3.push_back(t >= 5 ? t + 0.1 : NA);
  }
  const auto p = fixture::panel({e1, e2, e3}, y);
  TuningPlan plan;
  plan.T = 8;
  plan.l = 3;
  plan.lambda_grid = {0.0, 1.0};
  const std::vector<std::size_t> pool{0, 1, 2};
  const auto in = period_inputs(p, pool, 5, 2, 4, plan);
  REQUIRE(in.priors.s.size() == 3);
  CHECK(in.priors.method == PriorMethod::ImputedMix);
  CHECK(in.priors.s[2] > 0.0);
  CHECK(in.mu[2] == 5.1);
  const auto r = tune_varying(p, 12, {Transform::Identity, Penalty::L2}, plan);
  CHECK(r.pool == pool);
  CHECK(r.validation_periods.front() == 7);
  CHECK(r.validation_periods.back() == 11);
}

TEST_CASE("varying tuning ignores data from the test period on") {
  const auto full = synthetic(6, 0.15, 20);
  const Period t_test = 15;
  auto d = full.data();
  d.actuals.resize(t_test);
  d.actuals[t_test - 1] = NA;
  for (auto &row : d.forecasts) row.resize(t_test);
  const ForecastPanel cut(d);
  for (auto v : all_variants()) {
    const auto a = tune_varying(full, t_test, v, small_plan(PoolMode::Varying));
    const auto b = tune_varying(cut, t_test, v, small_plan(PoolMode::Varying));
    CHECK(a.per_lambda_scores == b.per_lambda_scores);
    CHECK(a.lambda_star == b.lambda_star);
    CHECK(a.pool == b.pool);
  }
}

TEST_CASE("varying tuning errors") {
  const auto p = synthetic(7);
  CHECK_THROWS_AS(tune_varying(p, 12, {Transform::Identity, Penalty::L2}, small_plan(PoolMode::Varying)),
                  InputError);
}

TEST_CASE("solve_ensemble with one expert") {
  PeriodInputs in;
  in.mu = {3.0};
  in.priors.s = {1.0};
  in.mu_bar = 3.0;
  in.sigma2 = 0.0;
  const auto w = solve_ensemble(in.mu, make_spec({Transform::ShiftedLog, Penalty::L2}, 1.0, in), {});
  CHECK(w.weights == std::vector<double>{1.0});
  CHECK(make_spec({Transform::ShiftedLog, Penalty::L2}, 1.0, in).sigma2 == 1e-12);
}
