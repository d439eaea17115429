#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace refcast {

/// f applied to the ensemble variance term.
enum class Transform { Identity, Log, ShiftedLog };

/// Regularizer pulling the weights toward the prior s.
enum class Penalty { L2, Entropy };

struct Variant {
  Transform transform = Transform::Identity;
  Penalty penalty = Penalty::L2;
  bool operator==(const Variant &) const = default;
};

/// The six (f, Phi) combinations in a fixed order.
const std::array<Variant, 6> &all_variants();

/// Names such as "identity-l2", "shiftedlog-entropy".
std::string variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::string transform_name(Transform t);
std::string penalty_name(Penalty p);

struct ModelSpec {
  Transform transform = Transform::Identity;
  Penalty penalty = Penalty::L2;
  double lambda = 0.0;
  /// Only read by ShiftedLog, where it must be > 0.
  double sigma2 = 0.0;
  /// Prior weights s; positive and summing to one.
  std::vector<double> priors;
  /// Plug-in for the expected forecast E[mu].
  double mu_bar = 0.0;

  Variant variant() const { return {transform, penalty}; }
  /// Throws DomainError unless the model is usable with k experts.
  void validate(std::size_t k) const;
};

/// Optimal weights and the parts of the objective at them.
struct WeightVector {
  std::vector<double> weights;
  std::vector<double> z;
  double objective_value = 0.0;
  /// f applied to the variance term.
  double variance_term = 0.0;
  /// lambda * Phi(w).
  double penalty_term = 0.0;
  /// Sum w_i^2 d_i^2 before f.
  double variance_raw = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Index of the start that produced the result.
  int start_index = 0;
};

struct ObjectiveParts {
  double total = 0.0;
  double variance_term = 0.0;
  double penalty_term = 0.0;
  double variance_raw = 0.0;
};

/// Numerically safe softmax (max subtraction).
std::vector<double> softmax(std::span<const double> z);

/// Sum_i w_i^2 (mu_i - mu_bar)^2 on raw deviations.
double variance_core(std::span<const double> w, std::span<const double> mu, double mu_bar);

/// Floor applied to every squared deviation: 1e-12 (1 + mu_bar^2).
double deviation_floor(double mu_bar);

/// Squared deviations (mu_i - mu_bar)^2, floored.
std::vector<double> squared_deviations(std::span<const double> mu, double mu_bar);

/// Phi(w) without lambda. Entropy needs every w_i > 0.
double penalty(std::span<const double> w, const ModelSpec &spec);

/// f(variance) + lambda Phi(w) with floored deviations.
ObjectiveParts objective(std::span<const double> w, std::span<const double> mu, const ModelSpec &spec);

/// Gradient of objective(softmax(z)) with respect to z.
std::vector<double> gradient_z(std::span<const double> z, std::span<const double> mu, const ModelSpec &spec);

/// Kernels working directly on precomputed squared deviations d2. They skip
/// validation and are meant for inner loops. objective_z evaluates the
/// entropy penalty through log-softmax so it stays finite for any finite z.
ObjectiveParts objective_d2(std::span<const double> w, std::span<const double> d2, const ModelSpec &spec);
ObjectiveParts objective_z(std::span<const double> z, std::span<const double> d2, const ModelSpec &spec);
/// Fills grad and returns the objective at z.
double value_and_gradient_z(std::span<const double> z, std::span<const double> d2, const ModelSpec &spec,
                            std::vector<double> &grad);

} // namespace refcast
