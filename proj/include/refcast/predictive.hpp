#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "refcast/objective.hpp"

namespace refcast {

enum class PredictiveFamily { NormalKnownVar, StudentTUnknownVar };

struct PredictiveSpec {
  PredictiveFamily family = PredictiveFamily::StudentTUnknownVar;
  /// Precision scaling factor.
  double m = 1.0;
  /// Gamma shape; degrees of freedom are 2a.
  double a = 2.0;
  /// w' mu
  double point = 0.0;
  /// w' Sigma w with Sigma the diagonal of floored squared deviations.
  double scale_core = 0.0;
  /// Known variance (Normal family only).
  double sigma2 = 0.0;

  void validate() const;
};

class PredictiveDistribution {
public:
  virtual ~PredictiveDistribution() = default;
  virtual double mean() const = 0;
  virtual double variance() const = 0;
  virtual double pdf(double y) const = 0;
  virtual double cdf(double y) const = 0;
  virtual double quantile(double p) const = 0;
  virtual std::vector<double> sample(std::size_t n, std::uint64_t seed) const = 0;
  double sd() const;
};

/// N(point, sigma2 + scale_core).
class NormalPredictive : public PredictiveDistribution {
public:
  explicit NormalPredictive(const PredictiveSpec &spec);
  double mean() const override { return mean_; }
  double variance() const override { return var_; }
  double pdf(double y) const override;
  double cdf(double y) const override;
  double quantile(double p) const override;
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const override;

private:
  double mean_;
  double var_;
};

/// Student-t with location `point`, precision m a / ((m + 1) scale_core)
/// and 2a degrees of freedom.
class StudentTPredictive : public PredictiveDistribution {
public:
  explicit StudentTPredictive(const PredictiveSpec &spec);
  double mean() const override { return location_; }
  double variance() const override;
  double pdf(double y) const override;
  double cdf(double y) const override;
  double quantile(double p) const override;
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const override;

  double precision() const { return precision_; }
  double dof() const { return 2.0 * a_; }
  /// 1 / sqrt(precision)
  double scale() const;

private:
  double location_;
  double precision_;
  double m_;
  double a_;
  double scale_core_;
};

std::unique_ptr<PredictiveDistribution> predictive_normal(const PredictiveSpec &spec);
std::unique_ptr<PredictiveDistribution> predictive_student_t(const PredictiveSpec &spec);
std::unique_ptr<PredictiveDistribution> make_predictive(const PredictiveSpec &spec);

/// Spec matching a model variant: ShiftedLog variants are Normal with the
/// known sigma2; Log variants are Student-t on w' Sigma w; Identity variants
/// are Student-t on exp(w' Sigma w).
PredictiveSpec predictive_spec_for(const ModelSpec &spec, std::span<const double> weights,
                                   std::span<const double> mu, double m = 1.0, double a = 2.0);

} // namespace refcast
