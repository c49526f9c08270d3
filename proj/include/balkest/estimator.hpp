#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "balkest/likelihood.hpp"
#include "balkest/optimizer.hpp"

namespace balkest {

// Defaults: base [1, 200], amplitudes [0, 100], phases [-2 pi, 2 pi], followed
// by the patience family's box.
Box default_box(const RateModel& rate, const PatienceModel& patience);

struct EstimatorOptions {
  std::size_t starts = 8;
  std::uint64_t seed = 0;
  NelderMeadOptions nelder_mead{};
  std::optional<Box> box;
  bool canonicalize_phases = true;
};

struct OptimizerTrace {
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  std::size_t starts = 0;
  std::size_t converged_starts = 0;
  std::size_t best_start = 0;
  bool converged = false;
  std::vector<double> start_logliks;
};

enum class CovarianceSource { cycles, observed_information, unavailable };

std::string to_string(CovarianceSource source);

struct CovarianceEstimate {
  std::size_t dim = 0;
  std::vector<double> matrix;  // row-major dim x dim
  CovarianceSource source = CovarianceSource::unavailable;
  // Information matrix was singular or indefinite; matrix is a pseudo-inverse
  // of its positive part.
  bool singular = false;

  double at(std::size_t i, std::size_t j) const { return matrix[i * dim + j]; }
  std::vector<double> standard_errors() const;
};

struct EstimationResult {
  std::vector<std::string> names;
  std::vector<double> mu_hat;
  double loglik = 0.0;
  CovarianceEstimate covariance;
  std::size_t n_effective = 0;
  std::size_t cycles = 0;
  OptimizerTrace trace;
};

// Maximizes ctx.loglik over the box by multi-start Nelder-Mead in logit
// coordinates. Starts are the rate-feasible points of a Latin hypercube drawn
// with the options' seed. Throws EstimationError if no start is feasible or
// no finite value is ever found.
EstimationResult fit(const LikelihoodContext& ctx, const EstimatorOptions& options = {});

// Central second differences with h_k = 1e-4 (1 + |x_k|).
std::vector<double> central_hessian(const Objective& f, std::span<const double> x);

// Cov(mu_hat) = I^-1 / N_r with I = -(1/N_r) sum_j Hess q(Z_j, mu_hat).
CovarianceEstimate covariance_estimate(const RateModel& rate, const PatienceModel& patience,
                                       const DelayPolicy& policy, int servers,
                                       std::span<const CycleData> cycles,
                                       std::span<const double> mu_hat);

// (-Hess l_n(mu_hat))^-1 for the whole observation.
CovarianceEstimate observed_information_covariance(const LikelihoodContext& ctx,
                                                   std::span<const double> mu_hat);

// Fit plus covariance. Uses the cycle estimator when there are at least
// 2 (k + p) complete cycles and falls back to the observed information.
EstimationResult estimate(const Observation& obs, const RateModel& rate,
                          const PatienceModel& patience, const DelayPolicy& policy,
                          const EstimatorOptions& options = {});

// (value, loglik) along coordinate `axis` with the other coordinates held at mu.
std::vector<std::pair<double, double>> profile_scan(const LikelihoodContext& ctx,
                                                    std::span<const double> mu, std::size_t axis,
                                                    std::span<const double> grid);

}  // namespace balkest
