#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "balkest/random.hpp"

namespace balkest {

enum class PatienceFamily { none, exponential, hyperexponential, lomax, geometric };

std::string to_string(PatienceFamily family);
PatienceFamily patience_family_from_string(const std::string& name);

struct ExpComponent {
  double weight = 1.0;
  double rate = 0.0;
};

class BoundPatience;

// Parametric patience distribution, described through its survival function
// S_theta(x) = P(Y >= x). S_theta(x) = 1 for every x <= 0.
//
// Parameter layouts:
//   none              ()                          S = 1 (nobody balks)
//   exponential       (rate)                      S = exp(-rate x)
//   hyperexponential  (w_1..w_{m-1}, r_1..r_m)    S = sum w_k exp(-r_k x), w_m = 1 - sum w
//   lomax             (scale, shape)              S = (scale / (scale + x))^shape
//   geometric         (p)                         S = (1 - p)^ceil(x), Y in {0, 1, 2, ...}
class PatienceModel {
 public:
  static PatienceModel none();
  static PatienceModel exponential();
  static PatienceModel hyperexponential(std::size_t components = 2);
  static PatienceModel lomax();
  static PatienceModel geometric();

  PatienceFamily family() const { return family_; }
  std::size_t arity() const;
  std::size_t components() const { return components_; }
  std::vector<std::string> parameter_names() const;

  // Default compact box used by the estimator.
  std::vector<double> default_lower() const;
  std::vector<double> default_upper() const;

  bool in_domain(std::span<const double> theta) const;
  // Throws ParameterError when theta has the wrong arity or lies outside the
  // family's parameter domain.
  void validate(std::span<const double> theta) const;

  double survival(std::span<const double> theta, double x) const;
  // -infinity when the survival is exactly zero.
  double log_survival(std::span<const double> theta, double x) const;
  double sample(std::span<const double> theta, Rng& rng) const;
  // lim_{x -> inf} S_theta(x), the probability of unbounded patience.
  double survival_at_infinity(std::span<const double> theta) const;

  BoundPatience bind(std::span<const double> theta) const;

 private:
  PatienceModel(PatienceFamily family, std::size_t components)
      : family_(family), components_(components) {}

  PatienceFamily family_;
  std::size_t components_;
};

// Patience distribution with theta fixed and validated.
class BoundPatience {
 public:
  double survival(double x) const;
  double log_survival(double x) const;
  double sample(Rng& rng) const;

  PatienceFamily family() const { return family_; }
  // Non-empty for none / exponential / hyperexponential: the survival is
  // sum_k weight_k exp(-rate_k x) on x > 0.
  std::span<const ExpComponent> mixture() const { return mixture_; }
  bool is_exp_mixture() const { return !mixture_.empty(); }
  // Geometric only: S(x) = ratio^ceil(x).
  double step_ratio() const { return ratio_; }

 private:
  friend class PatienceModel;
  PatienceFamily family_ = PatienceFamily::none;
  std::vector<ExpComponent> mixture_;
  double ratio_ = 1.0;
  double log_ratio_ = 0.0;
  double scale_ = 1.0;
  double shape_ = 1.0;
};

enum class ServiceFamily { exponential, gamma };

// Service requirement distribution G. Exponential is parametrized by its
// mean, gamma by (shape, scale).
class ServiceModel {
 public:
  static ServiceModel exponential(double mean);
  static ServiceModel gamma(double shape, double scale);

  ServiceFamily family() const { return family_; }
  double mean() const;
  double variance() const;
  double shape() const { return shape_; }
  double scale() const { return scale_; }
  // Strictly positive draw.
  double sample(Rng& rng) const;

 private:
  ServiceModel(ServiceFamily family, double shape, double scale)
      : family_(family), shape_(shape), scale_(scale) {}

  ServiceFamily family_;
  double shape_;
  double scale_;
};

}  // namespace balkest
