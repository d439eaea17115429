#include "refcast/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "refcast/error.hpp"

namespace refcast {

const std::array<Variant, 6> &all_variants() {
  static const std::array<Variant, 6> v{{
      {Transform::Identity, Penalty::L2},
      {Transform::Identity, Penalty::Entropy},
      {Transform::Log, Penalty::L2},
      {Transform::Log, Penalty::Entropy},
      {Transform::ShiftedLog, Penalty::L2},
      {Transform::ShiftedLog, Penalty::Entropy},
  }};
  return v;
}

std::string transform_name(Transform t) {
  switch (t) {
  case Transform::Identity:
    return "identity";
  case Transform::Log:
    return "log";
  case Transform::ShiftedLog:
    return "shiftedlog";
  }
  return "?";
}

std::string penalty_name(Penalty p) { return p == Penalty::L2 ? "l2" : "entropy"; }

std::string variant_name(Variant v) { return transform_name(v.transform) + "-" + penalty_name(v.penalty); }

Variant parse_variant(std::string_view name) {
  for (const auto &v : all_variants()) {
    if (variant_name(v) == name) {
      return v;
    }
  }
  throw InputError("unknown model variant '" + std::string(name) +
                   "' (expected identity|log|shiftedlog followed by -l2|-entropy)");
}

void ModelSpec::validate(std::size_t k) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("model spec: lambda must be finite and >= 0");
  }
  if (transform == Transform::ShiftedLog && !(sigma2 > 0.0 && std::isfinite(sigma2))) {
    throw DomainError("model spec: shiftedlog needs sigma2 > 0");
  }
  if (!std::isfinite(mu_bar)) {
    throw DomainError("model spec: mu_bar must be finite");
  }
  if (priors.size() != k) {
    throw DomainError("model spec: " + std::to_string(priors.size()) + " prior weights for " +
                      std::to_string(k) + " experts");
  }
  double sum = 0.0;
  for (double s : priors) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DomainError("model spec: prior weights must be strictly positive");
    }
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-8) {
    throw DomainError("model spec: prior weights must sum to 1");
  }
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) {
    throw DomainError("softmax: empty input");
  }
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> w(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    w[i] = std::exp(z[i] - m);
    sum += w[i];
  }
  for (double &x : w) {
    x /= sum;
  }
  return w;
}

namespace {

void check_sizes(std::size_t a, std::size_t b, const char *what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": length mismatch");
  }
}

double apply_transform(double v, const ModelSpec &spec) {
  switch (spec.transform) {
  case Transform::Identity:
    return v;
  case Transform::Log:
    return std::log(v);
  case Transform::ShiftedLog:
    return std::log(spec.sigma2 + v);
  }
  return v;
}

double transform_slope(double v, const ModelSpec &spec) {
  switch (spec.transform) {
  case Transform::Identity:
    return 1.0;
  case Transform::Log:
    return 1.0 / v;
  case Transform::ShiftedLog:
    return 1.0 / (spec.sigma2 + v);
  }
  return 1.0;
}

double raw_variance(std::span<const double> w, std::span<const double> d2) {
  double v = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    v += w[i] * w[i] * d2[i];
  }
  return v;
}

void check_log_domain(double v, const ModelSpec &spec) {
  if (spec.transform == Transform::Log && !(v > 0.0)) {
    throw NumericalError("log transform: variance term is zero (degenerate consensus)");
  }
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) {
    s += std::exp(x - m);
  }
  return m + std::log(s);
}

} // namespace

double variance_core(std::span<const double> w, std::span<const double> mu, double mu_bar) {
  check_sizes(w.size(), mu.size(), "variance_core");
  double v = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = mu[i] - mu_bar;
    v += w[i] * w[i] * d * d;
  }
  return v;
}

double deviation_floor(double mu_bar) { return 1e-12 * (1.0 + mu_bar * mu_bar); }

std::vector<double> squared_deviations(std::span<const double> mu, double mu_bar) {
  const double eps = deviation_floor(mu_bar);
  std::vector<double> d2(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu[i])) {
      throw DomainError("squared_deviations: non-finite forecast");
    }
    const double d = mu[i] - mu_bar;
    d2[i] = std::max(d * d, eps);
  }
  return d2;
}

double penalty(std::span<const double> w, const ModelSpec &spec) {
  check_sizes(w.size(), spec.priors.size(), "penalty");
  double p = 0.0;
  if (spec.penalty == Penalty::L2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = w[i] - spec.priors[i];
      p += d * d;
    }
    return p;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) {
      throw DomainError("entropy penalty: weights must be strictly positive");
    }
    p -= spec.priors[i] * std::log(w[i]);
  }
  return p;
}

ObjectiveParts objective_d2(std::span<const double> w, std::span<const double> d2, const ModelSpec &spec) {
  ObjectiveParts out;
  out.variance_raw = raw_variance(w, d2);
  check_log_domain(out.variance_raw, spec);
  out.variance_term = apply_transform(out.variance_raw, spec);
  out.penalty_term = spec.lambda == 0.0 ? 0.0 : spec.lambda * penalty(w, spec);
  out.total = out.variance_term + out.penalty_term;
  return out;
}

ObjectiveParts objective(std::span<const double> w, std::span<const double> mu, const ModelSpec &spec) {
  check_sizes(w.size(), mu.size(), "objective");
  spec.validate(mu.size());
  return objective_d2(w, squared_deviations(mu, spec.mu_bar), spec);
}

ObjectiveParts objective_z(std::span<const double> z, std::span<const double> d2, const ModelSpec &spec) {
  const auto w = softmax(z);
  ObjectiveParts out;
  out.variance_raw = raw_variance(w, d2);
  check_log_domain(out.variance_raw, spec);
  out.variance_term = apply_transform(out.variance_raw, spec);
  if (spec.lambda != 0.0) {
    double p = 0.0;
    if (spec.penalty == Penalty::L2) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w[i] - spec.priors[i];
        p += d * d;
      }
    } else {
      // log(1/w_i) = lse(z) - z_i
      const double lse = log_sum_exp(z);
      for (std::size_t i = 0; i < w.size(); ++i) {
        p += spec.priors[i] * (lse - z[i]);
      }
    }
    out.penalty_term = spec.lambda * p;
  }
  out.total = out.variance_term + out.penalty_term;
  return out;
}

double value_and_gradient_z(std::span<const double> z, std::span<const double> d2, const ModelSpec &spec,
                            std::vector<double> &grad) {
  const std::size_t k = z.size();
  const auto w = softmax(z);
  const auto parts = objective_z(z, d2, spec);
  const double fp = transform_slope(parts.variance_raw, spec);

  // dF/dw for the variance part and the L2 penalty; the entropy penalty is
  // added in z coordinates below.
  std::vector<double> g(k);
  for (std::size_t i = 0; i < k; ++i) {
    g[i] = fp * 2.0 * w[i] * d2[i];
    if (spec.penalty == Penalty::L2) {
      g[i] += spec.lambda * 2.0 * (w[i] - spec.priors[i]);
    }
  }
  double wg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    wg += w[i] * g[i];
  }
  grad.assign(k, 0.0);
  double ssum = 0.0;
  if (spec.penalty == Penalty::Entropy) {
    ssum = std::accumulate(spec.priors.begin(), spec.priors.end(), 0.0);
  }
  for (std::size_t i = 0; i < k; ++i) {
    grad[i] = w[i] * (g[i] - wg);
    if (spec.penalty == Penalty::Entropy) {
      grad[i] += spec.lambda * (w[i] * ssum - spec.priors[i]);
    }
  }
  return parts.total;
}

std::vector<double> gradient_z(std::span<const double> z, std::span<const double> mu, const ModelSpec &spec) {
  check_sizes(z.size(), mu.size(), "gradient_z");
  spec.validate(mu.size());
  for (double x : z) {
    if (!std::isfinite(x)) {
      throw DomainError("gradient_z: non-finite z");
    }
  }
  std::vector<double> grad;
  value_and_gradient_z(z, squared_deviations(mu, spec.mu_bar), spec, grad);
  return grad;
}

} // namespace refcast
