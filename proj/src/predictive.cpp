#include "refcast/predictive.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "refcast/error.hpp"

namespace refcast {

void PredictiveSpec::validate() const {
  if (!std::isfinite(point)) {
    throw DomainError("predictive: point forecast must be finite");
  }
  if (!(scale_core >= 0.0) || !std::isfinite(scale_core)) {
    throw DomainError("predictive: scale_core must be finite and >= 0");
  }
  if (family == PredictiveFamily::NormalKnownVar) {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2) || sigma2 + scale_core <= 0.0) {
      throw DomainError("predictive normal: variance must be positive");
    }
  } else {
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw DomainError("predictive student-t: m must be positive");
    }
    if (!(a > 1.0) || !std::isfinite(a)) {
      throw DomainError("predictive student-t: a must exceed 1");
    }
    if (!(scale_core > 0.0)) {
      throw DomainError("predictive student-t: scale_core = 0 gives a degenerate distribution");
    }
  }
}

double PredictiveDistribution::sd() const { return std::sqrt(variance()); }

namespace {

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile: probability must lie in (0, 1)");
  }
}

} // namespace

NormalPredictive::NormalPredictive(const PredictiveSpec &spec) {
  if (spec.family != PredictiveFamily::NormalKnownVar) {
    throw DomainError("predictive normal: wrong family");
  }
  spec.validate();
  mean_ = spec.point;
  var_ = spec.sigma2 + spec.scale_core;
}

double NormalPredictive::pdf(double y) const {
  const double u = y - mean_;
  return std::exp(-0.5 * u * u / var_) / std::sqrt(2.0 * std::numbers::pi * var_);
}

double NormalPredictive::cdf(double y) const {
  return boost::math::cdf(boost::math::normal_distribution<>(mean_, std::sqrt(var_)), y);
}

double NormalPredictive::quantile(double p) const {
  check_probability(p);
  return boost::math::quantile(boost::math::normal_distribution<>(mean_, std::sqrt(var_)), p);
}

std::vector<double> NormalPredictive::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mean_, std::sqrt(var_));
  std::vector<double> out(n);
  for (double &x : out) {
    x = d(rng);
  }
  return out;
}

StudentTPredictive::StudentTPredictive(const PredictiveSpec &spec) {
  if (spec.family != PredictiveFamily::StudentTUnknownVar) {
    throw DomainError("predictive student-t: wrong family");
  }
  spec.validate();
  location_ = spec.point;
  m_ = spec.m;
  a_ = spec.a;
  scale_core_ = spec.scale_core;
  precision_ = m_ * a_ / ((m_ + 1.0) * scale_core_);
}

double StudentTPredictive::variance() const { return (m_ + 1.0) * scale_core_ / (m_ * (a_ - 1.0)); }

double StudentTPredictive::scale() const { return 1.0 / std::sqrt(precision_); }

double StudentTPredictive::pdf(double y) const {
  const double c = m_ / (2.0 * (m_ + 1.0) * scale_core_);
  const double u = y - location_;
  const double log_norm = std::lgamma(a_ + 0.5) - std::lgamma(a_) - std::lgamma(0.5) + 0.5 * std::log(c);
  return std::exp(log_norm - (a_ + 0.5) * std::log1p(c * u * u));
}

double StudentTPredictive::cdf(double y) const {
  return boost::math::cdf(boost::math::students_t_distribution<>(dof()), (y - location_) / scale());
}

double StudentTPredictive::quantile(double p) const {
  check_probability(p);
  return location_ + scale() * boost::math::quantile(boost::math::students_t_distribution<>(dof()), p);
}

std::vector<double> StudentTPredictive::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::chi_squared_distribution<double> chi(dof());
  std::vector<double> out(n);
  for (double &x : out) {
    x = location_ + scale() * z(rng) / std::sqrt(chi(rng) / dof());
  }
  return out;
}

std::unique_ptr<PredictiveDistribution> predictive_normal(const PredictiveSpec &spec) {
  return std::make_unique<NormalPredictive>(spec);
}

std::unique_ptr<PredictiveDistribution> predictive_student_t(const PredictiveSpec &spec) {
  return std::make_unique<StudentTPredictive>(spec);
}

std::unique_ptr<PredictiveDistribution> make_predictive(const PredictiveSpec &spec) {
  if (spec.family == PredictiveFamily::NormalKnownVar) {
    return predictive_normal(spec);
  }
  return predictive_student_t(spec);
}

PredictiveSpec predictive_spec_for(const ModelSpec &spec, std::span<const double> weights,
                                   std::span<const double> mu, double m, double a) {
  if (weights.size() != mu.size()) {
    throw DomainError("predictive_spec_for: length mismatch");
  }
  const auto d2 = squared_deviations(mu, spec.mu_bar);
  PredictiveSpec p;
  p.m = m;
  p.a = a;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    p.point += weights[i] * mu[i];
    p.scale_core += weights[i] * weights[i] * d2[i];
  }
  switch (spec.transform) {
  case Transform::ShiftedLog:
    p.family = PredictiveFamily::NormalKnownVar;
    p.sigma2 = spec.sigma2;
    break;
  case Transform::Log:
    p.family = PredictiveFamily::StudentTUnknownVar;
    break;
  case Transform::Identity:
    p.family = PredictiveFamily::StudentTUnknownVar;
    p.scale_core = std::exp(p.scale_core);
    break;
  }
  return p;
}

} // namespace refcast
