#include "refcast/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "refcast/error.hpp"

namespace refcast {

const std::array<BenchmarkMethod, 7> &all_benchmarks() {
  static const std::array<BenchmarkMethod, 7> m{
      BenchmarkMethod::SimpleMean, BenchmarkMethod::TrimmedMean, BenchmarkMethod::WinsorizedMean,
      BenchmarkMethod::VarianceWeights, BenchmarkMethod::CWM, BenchmarkMethod::CCR,
      BenchmarkMethod::RidgeStacking};
  return m;
}

std::string benchmark_name(BenchmarkMethod m) {
  switch (m) {
  case BenchmarkMethod::SimpleMean:
    return "SimpleMean";
  case BenchmarkMethod::TrimmedMean:
    return "TrimmedMean";
  case BenchmarkMethod::WinsorizedMean:
    return "WinsorizedMean";
  case BenchmarkMethod::VarianceWeights:
    return "VarianceWeights";
  case BenchmarkMethod::CWM:
    return "CWM";
  case BenchmarkMethod::CCR:
    return "CCR";
  case BenchmarkMethod::RidgeStacking:
    return "RidgeStacking";
  }
  return "?";
}

BenchmarkMethod parse_benchmark(std::string_view name) {
  for (auto m : all_benchmarks()) {
    if (benchmark_name(m) == name) {
      return m;
    }
  }
  throw InputError("unknown benchmark '" + std::string(name) + "'");
}

void BenchmarkSpec::validate() const {
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw InputError("benchmarks: trim_fraction must lie in [0, 0.5)");
  }
  if (!(winsor_fraction >= 0.0 && winsor_fraction < 0.5)) {
    throw InputError("benchmarks: winsor_fraction must lie in [0, 0.5)");
  }
  if (ridge_alphas.empty()) {
    throw InputError("benchmarks: empty ridge alpha grid");
  }
  for (double a : ridge_alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InputError("benchmarks: ridge alphas must be positive");
    }
  }
  if (l < 2) {
    throw InputError("benchmarks: window length must be >= 2");
  }
}

namespace {

std::vector<double> sorted_values(std::span<const double> mu, const char *what) {
  if (mu.empty()) {
    throw DomainError(std::string(what) + ": no forecasts");
  }
  std::vector<double> v(mu.begin(), mu.end());
  std::sort(v.begin(), v.end());
  return v;
}

std::size_t tail_count(std::size_t k, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(k)));
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<std::size_t> active_experts(const ForecastPanel &panel, Period t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < panel.expert_count(); ++i) {
    if (panel.has_forecast(i, t)) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<double> forecasts_of(const ForecastPanel &panel, std::span<const std::size_t> experts, Period t) {
  std::vector<double> mu;
  for (auto i : experts) {
    mu.push_back(panel.forecast(i, t));
  }
  return mu;
}

} // namespace

double simple_mean(std::span<const double> mu) {
  if (mu.empty()) {
    throw DomainError("simple_mean: no forecasts");
  }
  return mean_of(mu);
}

double trimmed_mean(std::span<const double> mu, double fraction) {
  const auto v = sorted_values(mu, "trimmed_mean");
  const std::size_t k = v.size();
  const std::size_t m = tail_count(k, fraction);
  if (2 * m >= k) {
    return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
  }
  return mean_of(std::span<const double>(v).subspan(m, k - 2 * m));
}

double winsorized_mean(std::span<const double> mu, double fraction) {
  auto v = sorted_values(mu, "winsorized_mean");
  const std::size_t k = v.size();
  const std::size_t m = tail_count(k, fraction);
  if (2 * m >= k) {
    return trimmed_mean(mu, 0.5);
  }
  for (std::size_t j = 0; j < m; ++j) {
    v[j] = v[m];
    v[k - 1 - j] = v[k - 1 - m];
  }
  return mean_of(v);
}

double variance_weights(const ErrorVariances &v2, std::span<const double> mu) {
  if (v2.v2.size() != mu.size() || v2.available.size() != mu.size()) {
    throw DomainError("variance_weights: length mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (v2.available[i]) {
      const double p = 1.0 / std::max(v2.v2[i], kVarianceFloor);
      num += p * mu[i];
      den += p;
    }
  }
  if (den == 0.0) {
    throw DomainError("variance_weights: no expert has history");
  }
  return num / den;
}

double variance_weights(std::span<const double> v2, std::span<const double> mu) {
  ErrorVariances ev;
  ev.v2.assign(v2.begin(), v2.end());
  ev.available.assign(v2.size(), true);
  return variance_weights(ev, mu);
}

double cwm(const HistoryWindow &window, std::span<const double> mu) {
  const std::size_t k = window.experts.size();
  if (mu.size() != k) {
    throw DomainError("cwm: length mismatch");
  }
  if (k == 0) {
    throw DomainError("cwm: no experts");
  }
  std::vector<double> gain(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  std::size_t usable = 0;
  for (std::size_t j = 0; j < window.length(); ++j) {
    const double y = window.actuals[j];
    if (is_missing(y)) {
      continue;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < k; ++r) {
      if (!is_missing(window.forecasts[r][j])) {
        sum += window.forecasts[r][j];
        ++n;
      }
    }
    if (n == 0) {
      continue;
    }
    ++usable;
    const double full = sum / static_cast<double>(n);
    for (std::size_t r = 0; r < k; ++r) {
      const double f = window.forecasts[r][j];
      double without = full;
      if (!is_missing(f)) {
        if (n == 1) {
          continue;
        }
        without = (sum - f) / static_cast<double>(n - 1);
      }
      gain[r] += (without - y) * (without - y) - (full - y) * (full - y);
      ++counts[r];
    }
  }
  if (usable == 0) {
    throw DomainError("cwm: no usable history periods");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < k; ++r) {
    if (counts[r] > 0 && gain[r] / static_cast<double>(counts[r]) > 0.0 && !is_missing(mu[r])) {
      sum += mu[r];
      ++n;
    }
  }
  if (n == 0) {
    return consensus_mean(mu);
  }
  return sum / static_cast<double>(n);
}

double cwm(const ForecastPanel &panel, Period t, int l) {
  const auto pool = active_experts(panel, t);
  return cwm(history_window(panel, t - l, t - 1, pool), forecasts_of(panel, pool, t));
}

std::vector<double> ccr_benchmark_weights(const HistoryWindow &window) {
  const std::size_t k = window.experts.size();
  const auto v2 = impute_variances(estimate_error_variances(window));
  if (!v2) {
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
  }
  const double rho = k > 1 ? estimate_rho_c(window).rho : 0.0;
  auto s = ccr_raw_weights(*v2, rho);
  const double sum = std::accumulate(s.begin(), s.end(), 0.0);
  for (double &x : s) {
    x /= sum;
  }
  return s;
}

double ccr_ensemble(const HistoryWindow &window, std::span<const double> mu) {
  const auto s = ccr_benchmark_weights(window);
  if (s.size() != mu.size()) {
    throw DomainError("ccr_ensemble: length mismatch");
  }
  double out = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += s[i] * mu[i];
  }
  return out;
}

double ccr_ensemble(const ForecastPanel &panel, Period t, int l) {
  const auto pool = active_experts(panel, t);
  return ccr_ensemble(history_window(panel, t - l, t - 1, pool), forecasts_of(panel, pool, t));
}

double RidgeFit::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != coef.size()) {
    throw DomainError("ridge predict: length mismatch");
  }
  double out = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out += coef(static_cast<Eigen::Index>(i)) * x[i];
  }
  return out;
}

RidgeFit ridge_fit(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, std::span<const double> alphas,
                   bool fit_intercept) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 2 || y.size() != n) {
    throw DomainError("ridge_fit: need at least 2 rows matching y");
  }
  if (alphas.empty()) {
    throw DomainError("ridge_fit: empty alpha grid");
  }
  Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(p);
  double ym = 0.0;
  if (fit_intercept) {
    xm = X.colwise().mean();
    ym = y.mean();
  }
  const Eigen::MatrixXd Xc = X.rowwise() - xm;
  const Eigen::VectorXd yc = y.array() - ym;
  const Eigen::MatrixXd gram = Xc.transpose() * Xc;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);

  RidgeFit best;
  double best_loo = std::numeric_limits<double>::infinity();
  bool have = false;
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) {
      throw DomainError("ridge_fit: alpha must be positive");
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram + alpha * I);
    if (ldlt.info() != Eigen::Success) {
      throw NumericalError("ridge_fit: singular system");
    }
    const Eigen::VectorXd beta = ldlt.solve(Xc.transpose() * yc);
    const Eigen::MatrixXd AinvXt = ldlt.solve(Xc.transpose());
    const Eigen::VectorXd resid = yc - Xc * beta;
    double loo = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double h = Xc.row(i).dot(AinvXt.col(i));
      if (fit_intercept) {
        h += 1.0 / static_cast<double>(n);
      }
      const double denom = 1.0 - h;
      if (!(denom > 1e-12)) {
        loo = std::numeric_limits<double>::infinity();
        break;
      }
      loo += (resid(i) / denom) * (resid(i) / denom);
    }
    loo /= static_cast<double>(n);
    best.loo_mse.push_back(loo);
    if (!have || loo < best_loo) {
      have = true;
      best_loo = loo;
      best.alpha = alpha;
      best.coef = beta;
      best.intercept = ym - xm.dot(beta);
    }
  }
  return best;
}

double ridge_stacking(const ForecastPanel &panel, Period t, Period last_history, const BenchmarkSpec &spec) {
  const auto pool = active_experts(panel, t);
  std::vector<Period> rows;
  for (Period tau = 1; tau <= std::min(last_history, t - 1); ++tau) {
    if (panel.has_actual(tau)) {
      rows.push_back(tau);
    }
  }
  if (rows.size() < 2) {
    throw DomainError("ridge_stacking: fewer than 2 history periods before period " + std::to_string(t));
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pool.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto all = panel.forecasts_at(rows[r]);
    const double fill = consensus_mean(all);
    for (std::size_t c = 0; c < pool.size(); ++c) {
      const double v = all[pool[c]];
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = is_missing(v) ? fill : v;
    }
    y(static_cast<Eigen::Index>(r)) = panel.actual(rows[r]);
  }
  const auto fit = ridge_fit(X, y, spec.ridge_alphas, spec.fit_intercept);
  return fit.predict(forecasts_of(panel, pool, t));
}

double ridge_stacking(const ForecastPanel &panel, Period t, const BenchmarkSpec &spec) {
  return ridge_stacking(panel, t, t - 1, spec);
}

double benchmark_forecast(BenchmarkMethod method, const ForecastPanel &panel, Period t, Period origin,
                          const BenchmarkSpec &spec) {
  const auto pool = active_experts(panel, t);
  const auto mu = forecasts_of(panel, pool, t);
  auto window = [&]() { return history_window(panel, origin - spec.l + 1, origin, pool); };
  switch (method) {
  case BenchmarkMethod::SimpleMean:
    return simple_mean(mu);
  case BenchmarkMethod::TrimmedMean:
    return trimmed_mean(mu, spec.trim_fraction);
  case BenchmarkMethod::WinsorizedMean:
    return winsorized_mean(mu, spec.winsor_fraction);
  case BenchmarkMethod::VarianceWeights:
    return variance_weights(estimate_error_variances(window()), mu);
  case BenchmarkMethod::CWM:
    return cwm(window(), mu);
  case BenchmarkMethod::CCR:
    return ccr_ensemble(window(), mu);
  case BenchmarkMethod::RidgeStacking:
    return ridge_stacking(panel, t, origin, spec);
  }
  throw DomainError("benchmark_forecast: unknown method");
}

} // namespace refcast
