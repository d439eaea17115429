#include "refcast/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "refcast/error.hpp"

namespace refcast {

std::string prior_method_name(PriorMethod m) {
  switch (m) {
  case PriorMethod::VarianceWeights:
    return "variance";
  case PriorMethod::CCR:
    return "ccr";
  case PriorMethod::UserSupplied:
    return "user";
  case PriorMethod::ImputedMix:
    return "imputed";
  }
  return "?";
}

HistoryWindow history_window(const ForecastPanel &panel, Period first, Period last,
                             std::span<const std::size_t> experts) {
  HistoryWindow w;
  w.first = std::max<Period>(first, 1);
  w.last = std::min<Period>(last, panel.last_period());
  if (experts.empty()) {
    w.experts.resize(panel.expert_count());
    std::iota(w.experts.begin(), w.experts.end(), std::size_t{0});
  } else {
    w.experts.assign(experts.begin(), experts.end());
  }
  for (auto i : w.experts) {
    if (i >= panel.expert_count()) {
      throw DomainError("history_window: expert index out of range");
    }
  }
  w.forecasts.assign(w.experts.size(), {});
  for (Period tau = w.first; tau <= w.last; ++tau) {
    w.actuals.push_back(panel.actual(tau));
    for (std::size_t r = 0; r < w.experts.size(); ++r) {
      w.forecasts[r].push_back(panel.forecast(w.experts[r], tau));
    }
  }
  return w;
}

double consensus_mean(std::span<const double> mu) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : mu) {
    if (!is_missing(x)) {
      sum += x;
      ++n;
    }
  }
  if (n == 0) {
    throw DomainError("consensus_mean: no forecasts available");
  }
  return sum / static_cast<double>(n);
}

double estimate_sigma2(const HistoryWindow &window, Sigma2Form form) {
  std::vector<double> resid;
  for (std::size_t j = 0; j < window.length(); ++j) {
    if (is_missing(window.actuals[j])) {
      continue;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &row : window.forecasts) {
      if (!is_missing(row[j])) {
        sum += row[j];
        ++n;
      }
    }
    if (n > 0) {
      resid.push_back(window.actuals[j] - sum / static_cast<double>(n));
    }
  }
  if (resid.size() < 2) {
    throw DomainError("estimate_sigma2: fewer than 2 usable periods in window " + std::to_string(window.first) +
                      ".." + std::to_string(window.last));
  }
  double centre = 0.0;
  if (form == Sigma2Form::Centered) {
    centre = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(resid.size());
  }
  double ss = 0.0;
  for (double r : resid) {
    ss += (r - centre) * (r - centre);
  }
  return ss / static_cast<double>(resid.size() - 1);
}

double estimate_sigma2(const ForecastPanel &panel, Period t, int l, Sigma2Form form) {
  if (l < 2) {
    throw DomainError("estimate_sigma2: window length must be >= 2");
  }
  return estimate_sigma2(history_window(panel, t - l, t - 1), form);
}

ErrorVariances estimate_error_variances(const HistoryWindow &window) {
  ErrorVariances out;
  out.v2.assign(window.experts.size(), 0.0);
  out.available.assign(window.experts.size(), false);
  for (std::size_t r = 0; r < window.experts.size(); ++r) {
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < window.length(); ++j) {
      const double f = window.forecasts[r][j];
      const double y = window.actuals[j];
      if (!is_missing(f) && !is_missing(y)) {
        ss += (f - y) * (f - y);
        ++n;
      }
    }
    if (n > 0) {
      out.v2[r] = ss / static_cast<double>(n);
      out.available[r] = true;
    }
  }
  return out;
}

ErrorVariances estimate_error_variances(const ForecastPanel &panel, Period t, int l) {
  if (l < 1) {
    throw DomainError("estimate_error_variances: window length must be >= 1");
  }
  return estimate_error_variances(history_window(panel, t - l, t - 1));
}

RhoEstimate mean_pairwise_correlation(const HistoryWindow &window) {
  RhoEstimate out;
  out.fallback = true;
  std::vector<std::size_t> periods;
  for (std::size_t j = 0; j < window.length(); ++j) {
    if (!is_missing(window.actuals[j])) {
      periods.push_back(j);
    }
  }
  if (periods.size() < 2) {
    return out;
  }
  // Centered error series of complete-case experts with non-zero spread.
  std::vector<std::vector<double>> series;
  std::vector<double> norms;
  for (const auto &row : window.forecasts) {
    std::vector<double> e;
    e.reserve(periods.size());
    bool complete = true;
    for (auto j : periods) {
      if (is_missing(row[j])) {
        complete = false;
        break;
      }
      e.push_back(row[j] - window.actuals[j]);
    }
    if (!complete) {
      continue;
    }
    const double m = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    double ss = 0.0;
    for (double &x : e) {
      x -= m;
      ss += x * x;
    }
    if (ss > 0.0) {
      series.push_back(std::move(e));
      norms.push_back(std::sqrt(ss));
    }
  }
  out.complete_experts = series.size();
  if (series.size() < 2) {
    return out;
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < series.size(); ++a) {
    for (std::size_t b = a + 1; b < series.size(); ++b) {
      double c = 0.0;
      for (std::size_t j = 0; j < series[a].size(); ++j) {
        c += series[a][j] * series[b][j];
      }
      sum += c / (norms[a] * norms[b]);
      ++pairs;
    }
  }
  const double k = static_cast<double>(std::max<std::size_t>(window.experts.size(), 2));
  const double lo = -1.0 / (k - 1.0) + 1e-6;
  out.rho = std::clamp(sum / static_cast<double>(pairs), lo, 0.999);
  out.fallback = false;
  return out;
}

RhoEstimate estimate_rho_c(const HistoryWindow &window, const RhoEstimator &estimator) {
  return estimator(window);
}

RhoEstimate estimate_rho_c(const ForecastPanel &panel, Period t, int l) {
  if (l < 2) {
    throw DomainError("estimate_rho_c: window length must be >= 2");
  }
  return mean_pairwise_correlation(history_window(panel, t - l, t - 1));
}

std::vector<double> ccr_raw_weights(std::span<const double> v2, double rho) {
  const std::size_t k = v2.size();
  if (k == 0) {
    throw DomainError("ccr prior: empty variance vector");
  }
  for (double v : v2) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("ccr prior: variances must be positive and finite");
    }
  }
  if (k > 1) {
    const double lo = -1.0 / static_cast<double>(k - 1);
    if (!(rho > lo && rho < 1.0)) {
      throw DomainError("ccr prior: rho outside the positive-definite range");
    }
  }
  // Precisions are rescaled by the largest one; the weights are invariant to
  // this and the degeneracy check becomes relative.
  std::vector<double> q(k);
  for (std::size_t i = 0; i < k; ++i) {
    q[i] = 1.0 / std::sqrt(v2[i]);
  }
  const double qmax = *std::max_element(q.begin(), q.end());
  double sq = 0.0, sp = 0.0;
  for (double &x : q) {
    x /= qmax;
    sq += x;
    sp += x * x;
  }
  const double a = 1.0 + static_cast<double>(k - 1) * rho;
  const double den = a * sp - rho * sq * sq;
  if (std::abs(den) < 1e-14) {
    std::ostringstream os;
    os << "ccr prior: degenerate denominator for k=" << k << " rho=" << rho;
    throw NumericalError(os.str());
  }
  std::vector<double> s(k);
  for (std::size_t i = 0; i < k; ++i) {
    s[i] = (a * q[i] * q[i] - rho * q[i] * sq) / den;
  }
  return s;
}

std::vector<bool> floor_and_renormalize(std::vector<double> &s, double floor) {
  const std::size_t k = s.size();
  if (static_cast<double>(k) * floor >= 1.0) {
    throw DomainError("prior floor too large for the number of experts");
  }
  std::vector<bool> floored(k, false);
  for (;;) {
    bool changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (!floored[i] && !(s[i] >= floor)) {
        floored[i] = true;
        changed = true;
      }
    }
    double free_sum = 0.0;
    std::size_t nfloored = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (floored[i]) {
        ++nfloored;
      } else {
        free_sum += s[i];
      }
    }
    const double target = 1.0 - static_cast<double>(nfloored) * floor;
    for (std::size_t i = 0; i < k; ++i) {
      if (floored[i]) {
        s[i] = floor;
      } else {
        s[i] *= target / free_sum;
      }
    }
    if (!changed) {
      break;
    }
  }
  return floored;
}

PriorWeights ccr_prior(std::span<const double> v2, double rho) {
  PriorWeights p;
  p.s = ccr_raw_weights(v2, rho);
  p.floored = floor_and_renormalize(p.s);
  p.method = PriorMethod::CCR;
  p.rho_hat = rho;
  p.v2_hat.assign(v2.begin(), v2.end());
  return p;
}

PriorWeights variance_prior(std::span<const double> v2) {
  auto p = ccr_prior(v2, 0.0);
  p.method = PriorMethod::VarianceWeights;
  p.rho_hat.reset();
  return p;
}

std::optional<std::vector<double>> impute_variances(const ErrorVariances &variances) {
  const std::size_t k = variances.v2.size();
  if (variances.available.size() != k) {
    throw DomainError("impute_variances: mask length mismatch");
  }
  double psum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (variances.available[i]) {
      psum += 1.0 / std::max(variances.v2[i], kVarianceFloor);
      ++n;
    }
  }
  if (n == 0) {
    return std::nullopt;
  }
  const double imputed = static_cast<double>(n) / psum;
  std::vector<double> v2(k);
  for (std::size_t i = 0; i < k; ++i) {
    v2[i] = variances.available[i] ? std::max(variances.v2[i], kVarianceFloor) : imputed;
  }
  return v2;
}

PriorWeights impute_priors(const ErrorVariances &variances, double rho, PriorMethod method) {
  const std::size_t k = variances.v2.size();
  if (k == 0) {
    throw DomainError("impute_priors: empty pool");
  }
  const auto v2 = impute_variances(variances);
  if (!v2) {
    PriorWeights p;
    p.s.assign(k, 1.0 / static_cast<double>(k));
    p.floored.assign(k, false);
    p.method = PriorMethod::ImputedMix;
    return p;
  }
  auto p = method == PriorMethod::VarianceWeights ? variance_prior(*v2) : ccr_prior(*v2, rho);
  if (std::find(variances.available.begin(), variances.available.end(), false) != variances.available.end()) {
    p.method = PriorMethod::ImputedMix;
  }
  return p;
}

} // namespace refcast
