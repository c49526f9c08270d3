#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace balkest {

// One sinusoidal component amplitude * sin(phase - frequency * t). Amplitude
// and phase are slots in the parameter vector; the frequency is fixed model
// structure.
struct SinusoidTerm {
  std::size_t amplitude_index = 0;
  std::size_t phase_index = 0;
  double frequency = 0.0;
};

class BoundRate;

// Periodic arrival-rate family
//   lambda_alpha(t) = alpha[base] + sum_k alpha[amp_k] * sin(alpha[phase_k] - w_k t)
// with known frequencies w_k and hence a known period P.
class RateModel {
 public:
  static constexpr double kDefaultFloor = 1e-6;

  // Default parameter layout: (base, amplitude_1..m, phase_1..m).
  // A non-positive period means "least common period of the terms".
  explicit RateModel(std::vector<double> frequencies, double period = 0.0,
                     double floor = kDefaultFloor);

  RateModel(std::size_t base_index, std::vector<SinusoidTerm> terms,
            double period, double floor = kDefaultFloor);

  // Constant rate alpha = (lambda0); the period only fixes the regeneration grid.
  static RateModel constant(double period = 1.0, double floor = kDefaultFloor);

  std::size_t arity() const { return arity_; }
  double period() const { return period_; }
  double floor() const { return floor_; }
  std::size_t base_index() const { return base_index_; }
  std::span<const SinusoidTerm> terms() const { return terms_; }
  std::vector<std::string> parameter_names() const;
  // Indices of phase parameters (unbounded reals, 2*pi periodic).
  std::vector<std::size_t> phase_indices() const;

  bool is_valid(std::span<const double> alpha) const;
  // Throws ParameterError on arity mismatch and ValidityError when
  // base - sum |amplitude| < floor.
  void validate(std::span<const double> alpha) const;

  double rate_at(std::span<const double> alpha, double t) const;
  double integral(std::span<const double> alpha, double t0, double t1) const;
  double upper_bound(std::span<const double> alpha) const;
  double lower_bound(std::span<const double> alpha) const;

  // Validated view with alpha fixed, for hot loops.
  BoundRate bind(std::span<const double> alpha) const;

 private:
  void check_arity(std::span<const double> alpha) const;

  std::size_t base_index_ = 0;
  std::vector<SinusoidTerm> terms_;
  double period_ = 1.0;
  double floor_ = kDefaultFloor;
  std::size_t arity_ = 1;
};

// Least common period of the given angular frequencies, or throws
// ValidityError when they are not commensurate (up to 10^4 base periods).
double common_period(std::span<const double> frequencies);

class BoundRate {
 public:
  double operator()(double t) const { return rate_at(t); }
  double rate_at(double t) const;
  // Exact antiderivative difference; requires t0 <= t1.
  double integral(double t0, double t1) const;
  double upper_bound() const { return upper_; }
  double base() const { return base_; }

  std::size_t term_count() const { return amplitude_.size(); }
  double amplitude(std::size_t k) const { return amplitude_[k]; }
  double phase(std::size_t k) const { return phase_[k]; }
  double frequency(std::size_t k) const { return frequency_[k]; }

 private:
  friend class RateModel;
  double base_ = 0.0;
  double upper_ = 0.0;
  std::vector<double> amplitude_;
  std::vector<double> phase_;
  std::vector<double> frequency_;
};

}  // namespace balkest
