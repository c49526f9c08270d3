#include "balkest/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "balkest/errors.hpp"

namespace balkest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_integer_multiple(double value, double tol) {
  return std::abs(value - std::round(value)) <= tol * std::max(1.0, std::abs(value));
}

}  // namespace

double common_period(std::span<const double> frequencies) {
  double longest = 0.0;
  for (double w : frequencies) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidityError("rate model frequencies must be positive and finite");
    }
    longest = std::max(longest, kTwoPi / w);
  }
  if (frequencies.empty()) return 1.0;
  for (int n = 1; n <= 10000; ++n) {
    const double candidate = n * longest;
    const bool fits = std::all_of(frequencies.begin(), frequencies.end(), [&](double w) {
      return is_integer_multiple(candidate * w / kTwoPi, 1e-9);
    });
    if (fits) return candidate;
  }
  throw ValidityError("rate model frequencies are not commensurate");
}

RateModel::RateModel(std::vector<double> frequencies, double period, double floor)
    : floor_(floor) {
  const std::size_t m = frequencies.size();
  terms_.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    terms_.push_back({1 + k, 1 + m + k, frequencies[k]});
  }
  base_index_ = 0;
  arity_ = 1 + 2 * m;
  if (period > 0.0) {
    for (double w : frequencies) {
      if (!is_integer_multiple(w * period / kTwoPi, 1e-9)) {
        throw ValidityError("period is not a multiple of every term period");
      }
    }
    period_ = period;
  } else {
    period_ = common_period(frequencies);
  }
  if (!(floor_ > 0.0)) throw ValidityError("rate floor must be positive");
}

RateModel::RateModel(std::size_t base_index, std::vector<SinusoidTerm> terms, double period,
                     double floor)
    : base_index_(base_index), terms_(std::move(terms)), period_(period), floor_(floor) {
  std::vector<std::size_t> slots{base_index_};
  std::vector<double> freqs;
  for (const auto& term : terms_) {
    slots.push_back(term.amplitude_index);
    slots.push_back(term.phase_index);
    freqs.push_back(term.frequency);
  }
  std::sort(slots.begin(), slots.end());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] != i) throw ParameterError("rate model parameter slots must be a permutation");
  }
  arity_ = slots.size();
  if (period_ > 0.0) {
    for (double w : freqs) {
      if (!(w > 0.0) || !is_integer_multiple(w * period_ / kTwoPi, 1e-9)) {
        throw ValidityError("period is not a multiple of every term period");
      }
    }
  } else {
    period_ = common_period(freqs);
  }
  if (!(floor_ > 0.0)) throw ValidityError("rate floor must be positive");
}

RateModel RateModel::constant(double period, double floor) {
  if (!(period > 0.0)) throw ValidityError("period must be positive");
  return RateModel(0, {}, period, floor);
}

std::vector<std::string> RateModel::parameter_names() const {
  std::vector<std::string> names(arity_);
  names[base_index_] = "base";
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    names[terms_[k].amplitude_index] = "amplitude_" + std::to_string(k + 1);
    names[terms_[k].phase_index] = "phase_" + std::to_string(k + 1);
  }
  return names;
}

std::vector<std::size_t> RateModel::phase_indices() const {
  std::vector<std::size_t> out;
  for (const auto& term : terms_) out.push_back(term.phase_index);
  return out;
}

void RateModel::check_arity(std::span<const double> alpha) const {
  if (alpha.size() != arity_) {
    std::ostringstream msg;
    msg << "rate model expects " << arity_ << " parameters, got " << alpha.size();
    throw ParameterError(msg.str());
  }
}

double RateModel::lower_bound(std::span<const double> alpha) const {
  check_arity(alpha);
  double lo = alpha[base_index_];
  for (const auto& term : terms_) lo -= std::abs(alpha[term.amplitude_index]);
  return lo;
}

double RateModel::upper_bound(std::span<const double> alpha) const {
  validate(alpha);
  double hi = alpha[base_index_];
  for (const auto& term : terms_) hi += std::abs(alpha[term.amplitude_index]);
  return hi;
}

bool RateModel::is_valid(std::span<const double> alpha) const {
  if (alpha.size() != arity_) return false;
  for (double a : alpha) {
    if (!std::isfinite(a)) return false;
  }
  return lower_bound(alpha) >= floor_;
}

void RateModel::validate(std::span<const double> alpha) const {
  check_arity(alpha);
  if (!is_valid(alpha)) {
    std::ostringstream msg;
    msg << "arrival rate parameters are invalid: base - sum|amplitude| = " << lower_bound(alpha)
        << " is below the floor " << floor_;
    throw ValidityError(msg.str());
  }
}

double RateModel::rate_at(std::span<const double> alpha, double t) const {
  return bind(alpha).rate_at(t);
}

double RateModel::integral(std::span<const double> alpha, double t0, double t1) const {
  return bind(alpha).integral(t0, t1);
}

BoundRate RateModel::bind(std::span<const double> alpha) const {
  validate(alpha);
  BoundRate bound;
  bound.base_ = alpha[base_index_];
  bound.upper_ = bound.base_;
  for (const auto& term : terms_) {
    bound.amplitude_.push_back(alpha[term.amplitude_index]);
    bound.phase_.push_back(alpha[term.phase_index]);
    bound.frequency_.push_back(term.frequency);
    bound.upper_ += std::abs(alpha[term.amplitude_index]);
  }
  return bound;
}

double BoundRate::rate_at(double t) const {
  double value = base_;
  for (std::size_t k = 0; k < amplitude_.size(); ++k) {
    value += amplitude_[k] * std::sin(phase_[k] - frequency_[k] * t);
  }
  return value;
}

double BoundRate::integral(double t0, double t1) const {
  if (t0 > t1) throw OrderingError("rate integral requires t0 <= t1");
  double value = base_ * (t1 - t0);
  for (std::size_t k = 0; k < amplitude_.size(); ++k) {
    value += amplitude_[k] / frequency_[k] *
             (std::cos(phase_[k] - frequency_[k] * t1) - std::cos(phase_[k] - frequency_[k] * t0));
  }
  return value;
}

}  // namespace balkest
