#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "refcast/benchmarks.hpp"
#include "refcast/error.hpp"

using namespace refcast;
using fixture::NA;

namespace {

const std::vector<double> kTen{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};

} // namespace

TEST_CASE("simple mean") {
  CHECK(simple_mean(std::vector<double>{1, 2, 3}) == 2.0);
  CHECK(simple_mean(std::vector<double>{5}) == 5.0);
  CHECK(simple_mean(std::vector<double>{-1, 1}) == 0.0);
  CHECK_THROWS(simple_mean(std::vector<double>{}));
}

TEST_CASE("trimmed mean") {
  CHECK(trimmed_mean(kTen, 0.10) == 5.5);
  CHECK(trimmed_mean(kTen, 0.0) == doctest::Approx(14.5));
  CHECK(trimmed_mean(std::vector<double>{1, 7}, 0.10) == 4.0);
  CHECK(trimmed_mean(std::vector<double>{4, 1, 9}, 0.49) == 4.0);
  CHECK(trimmed_mean(std::vector<double>{5}, 0.4) == 5.0);
}

TEST_CASE("winsorized mean") {
  CHECK(winsorized_mean(kTen, 0.15) == 5.5);
  CHECK(winsorized_mean(kTen, 0.0) == doctest::Approx(14.5));
  CHECK(winsorized_mean(std::vector<double>{3, 3, 3, 3}, 0.15) == 3.0);
}

TEST_CASE("robust means stay inside the range") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 3);
  for (int r = 0; r < 200; ++r) {
    std::vector<double> mu(1 + r % 13);
    for (auto &x : mu) x = n(rng);
    const double lo = *std::min_element(mu.begin(), mu.end());
    const double hi = *std::max_element(mu.begin(), mu.end());
    for (double f : {0.0, 0.1, 0.15, 0.3, 0.45}) {
      const double a = trimmed_mean(mu, f), b = winsorized_mean(mu, f);
      CHECK(a >= lo - 1e-12);
      CHECK(a <= hi + 1e-12);
      CHECK(b >= lo - 1e-12);
      CHECK(b <= hi + 1e-12);
    }
  }
}

TEST_CASE("variance weights") {
  CHECK(variance_weights(std::vector<double>{1, 4}, std::vector<double>{0, 10}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(variance_weights(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 6}) == doctest::Approx(3.0));
  CHECK(variance_weights(std::vector<double>{0.3}, std::vector<double>{7}) == 7.0);
  ErrorVariances none;
  none.v2 = {0, 0};
  none.available = {false, false};
  CHECK_THROWS_AS(variance_weights(none, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("cwm hand cases") {
  // Identical experts: zero contributions, so every expert is kept.
  const auto same = fixture::panel({{1, 2, 3, 5}, {1, 2, 3, 7}}, {1.5, 2.5, 2.0, 0.0});
  CHECK(cwm(same, 4, 3) == 6.0);
  // k = 2: expert 1 is exact, expert 2 is off by 2. Without expert 1 the
  // crowd error is 2, with both it is 1, so only expert 1 contributes.
  const auto two = fixture::panel({{1, 2, 3, 10}, {3, 4, 5, 20}}, {1, 2, 3, 4});
  CHECK(cwm(two, 4, 3) == 10.0);
}

TEST_CASE("cwm drops a heavily biased expert") {
  int excluded = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    std::vector<std::vector<double>> f(5, std::vector<double>(16));
    std::vector<double> y(16);
    for (int t = 0; t < 16; ++t) {
      y[t] = 10.0 + n(rng);
      for (int i = 0; i < 5; ++i) f[i][t] = y[t] + n(rng) + (i == 4 ? 25.0 : 0.0);
    }
    f[4][15] = 1e6; // visible only if the expert is kept
    const auto p = fixture::panel(f, y);
    excluded += cwm(p, 16, 14) < 1e3;
  }
  CHECK(excluded >= 95);
}

TEST_CASE("ccr ensemble") {
  const auto p = fixture::panel({{1, 2, 3, 10}, {1, 2, 3, 30}}, {1.5, 2.5, 3.5, 0});
  // Equal variances give the simple mean.
  CHECK(ccr_ensemble(p, 4, 3) == doctest::Approx(20.0));
  // Uncorrelated history: rho 0 reduces to variance weights. Errors are
  // orthogonal so the correlation is zero.
  const auto q = fixture::panel({{1, -1, 1, -1, 0}, {2, 2, -2, -2, 10}}, {0, 0, 0, 0, 0});
  const auto w = history_window(q, 1, 4);
  CHECK(estimate_rho_c(w).rho == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(ccr_ensemble(q, 5, 4) == doctest::Approx(variance_weights(std::vector<double>{1, 4}, std::vector<double>{0, 10})));
  const auto s = ccr_benchmark_weights(w);
  CHECK(s[0] == doctest::Approx(0.8));
  CHECK(s[1] == doctest::Approx(0.2));
}

TEST_CASE("ccr benchmark weights keep negative entries") {
  SyntheticConfig cfg;
  cfg.rho = 0.8;
  cfg.seed = 11;
  cfg.error_sd = {1.0, 4.0, 1.2};
  const auto p = generate_synthetic(3, 60, cfg);
  const auto s = ccr_benchmark_weights(history_window(p, 1, 60));
  CHECK(s[0] + s[1] + s[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*std::min_element(s.begin(), s.end()) < 0.0);
}

TEST_CASE("ridge fit matches the direct normal equations") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  const std::vector<double> alphas{0.1, 1.0, 10.0};
  for (bool intercept : {true, false}) {
    for (int r = 0; r < 20; ++r) {
      const int rows = 8 + r, cols = 1 + r % 5;
      Eigen::MatrixXd X(rows, cols);
      Eigen::VectorXd y(rows);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) X(i, j) = 3.0 + n(rng);
        y(i) = 1.0 + X.row(i).sum() * 0.4 + n(rng);
      }
      const auto fit = ridge_fit(X, y, alphas, intercept);
      REQUIRE(fit.loo_mse.size() == 3);
      for (std::size_t a = 0; a < alphas.size(); ++a)
        CHECK(fit.loo_mse[a] == doctest::Approx(oracle::ridge_loo_bruteforce(X, y, alphas[a], intercept)).epsilon(1e-9));
      const auto b = oracle::ridge_direct(X, y, fit.alpha, intercept);
      CHECK(fit.intercept == doctest::Approx(b(0)).epsilon(1e-9).scale(1.0));
      for (int j = 0; j < cols; ++j) CHECK(fit.coef(j) == doctest::Approx(b(j + 1)).epsilon(1e-9).scale(1.0));
      const double best = *std::min_element(fit.loo_mse.begin(), fit.loo_mse.end());
      const auto it = std::find(fit.loo_mse.begin(), fit.loo_mse.end(), best);
      CHECK(fit.alpha == alphas[static_cast<std::size_t>(it - fit.loo_mse.begin())]);
    }
  }
}

TEST_CASE("ridge stacking examples") {
  BenchmarkSpec spec;
  spec.ridge_alphas = {0.1};
  std::vector<double> f, y;
  for (int t = 1; t <= 20; ++t) {
    y.push_back(std::sin(t) * 5.0);
    f.push_back(y.back());
  }
  f.push_back(3.0);
  y.push_back(NA);
  spec.fit_intercept = false;
  const auto p = fixture::panel({f}, y);
  const double out = ridge_stacking(p, 21, spec);
  CHECK(std::abs(out - 3.0) <= 0.02 * 3.0);

  spec.fit_intercept = true;
  const auto zeros = fixture::panel({{0, 0, 0, 0, 0}}, {1, 2, 3, 6, NA});
  CHECK(ridge_stacking(zeros, 5, spec) == doctest::Approx(3.0));

  spec.ridge_alphas = {0.1, 1.0, 10.0};
  const auto dup = fixture::panel({{1, 3, 2, 5, 4}, {1, 3, 2, 5, 4}}, {1.1, 2.9, 2.2, 4.8, NA});
  const double d = ridge_stacking(dup, 5, spec);
  CHECK(std::isfinite(d));
  CHECK_THROWS_AS(ridge_stacking(dup, 2, spec), DomainError);
}

TEST_CASE("location equivariance") {
  SyntheticConfig cfg;
  cfg.seed = 9;
  cfg.rho = 0.4;
  cfg.missing_rate = 0.1;
  const auto p = generate_synthetic(7, 30, cfg);
  auto d = p.data();
  const double c = 37.25;
  for (auto &row : d.forecasts)
    for (auto &x : row)
      if (!is_missing(x)) x += c;
  for (auto &x : d.actuals) x += c;
  const ForecastPanel q(d);
  BenchmarkSpec spec;
  for (auto m : {BenchmarkMethod::SimpleMean, BenchmarkMethod::TrimmedMean, BenchmarkMethod::WinsorizedMean,
                 BenchmarkMethod::VarianceWeights, BenchmarkMethod::CWM, BenchmarkMethod::CCR}) {
    for (Period t = 20; t <= 30; ++t) {
      const double a = benchmark_forecast(m, p, t, t - 1, spec);
      const double b = benchmark_forecast(m, q, t, t - 1, spec);
      CHECK(b - a == doctest::Approx(c).epsilon(1e-9));
    }
  }
}

TEST_CASE("benchmark names") {
  for (auto m : all_benchmarks()) CHECK(parse_benchmark(benchmark_name(m)) == m);
  CHECK(benchmark_name(BenchmarkMethod::RidgeStacking) == "RidgeStacking");
  CHECK_THROWS_AS(parse_benchmark("Median"), InputError);
  BenchmarkSpec s;
  s.trim_fraction = 0.5;
  CHECK_THROWS(s.validate());
}
