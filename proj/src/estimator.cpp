#include "balkest/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "balkest/errors.hpp"

namespace balkest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool better(double f_a, std::span<const double> a, double f_b, std::span<const double> b) {
  if (f_a != f_b) return f_a > f_b;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

CovarianceEstimate invert_information(const std::vector<double>& hessian, std::size_t dim,
                                      CovarianceSource source) {
  CovarianceEstimate out;
  out.dim = dim;
  out.source = source;
  Eigen::MatrixXd info(dim, dim);
  bool finite = true;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      info(i, j) = -0.5 * (hessian[i * dim + j] + hessian[j * dim + i]);
      finite = finite && std::isfinite(info(i, j));
    }
  }
  if (!finite) {
    out.source = CovarianceSource::unavailable;
    out.singular = true;
    out.matrix.assign(dim * dim, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const Eigen::VectorXd values = eig.eigenvalues();
  const double top = values.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) > 1e-12 * top && top > 0.0) {
      inv(k) = 1.0 / values(k);
    } else {
      out.singular = true;
    }
  }
  const Eigen::MatrixXd cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  out.matrix.resize(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.matrix[i * dim + j] = 0.5 * (cov(i, j) + cov(j, i));
    }
  }
  return out;
}

}  // namespace

std::string to_string(CovarianceSource source) {
  switch (source) {
    case CovarianceSource::cycles: return "cycles";
    case CovarianceSource::observed_information: return "observed_information";
    case CovarianceSource::unavailable: return "unavailable";
  }
  return "unknown";
}

std::vector<double> CovarianceEstimate::standard_errors() const {
  std::vector<double> se(dim);
  for (std::size_t k = 0; k < dim; ++k) se[k] = std::sqrt(std::max(0.0, at(k, k)));
  return se;
}

Box default_box(const RateModel& rate, const PatienceModel& patience) {
  Box box;
  box.lo.assign(rate.arity(), 0.0);
  box.hi.assign(rate.arity(), 100.0);
  box.lo[rate.base_index()] = 1.0;
  box.hi[rate.base_index()] = 200.0;
  for (auto k : rate.phase_indices()) {
    box.lo[k] = -kTwoPi;
    box.hi[k] = kTwoPi;
  }
  for (double v : patience.default_lower()) box.lo.push_back(v);
  for (double v : patience.default_upper()) box.hi.push_back(v);
  return box;
}

EstimationResult fit(const LikelihoodContext& ctx, const EstimatorOptions& options) {
  const Box box = options.box ? *options.box : default_box(ctx.rate_model(), ctx.patience_model());
  box.validate();
  if (box.size() != ctx.arity()) throw ParameterError("box dimension does not match the model");
  if (options.starts == 0) throw ParameterError("at least one start is required");
  const LogitTransform transform(box);

  Rng rng(splitmix64(options.seed ^ 0x6e6d7374ULL));
  std::vector<std::vector<double>> starts;
  for (std::size_t attempt = 0; attempt < 50 && starts.size() < options.starts; ++attempt) {
    for (auto& x : latin_hypercube(box, 4 * options.starts, rng)) {
      if (starts.size() == options.starts) break;
      if (!is_infeasible(ctx.loglik(x))) starts.push_back(std::move(x));
    }
  }
  if (starts.empty()) throw EstimationError("no feasible starting point in the box");

  const auto objective = [&](std::span<const double> z) {
    const double l = ctx.loglik(transform.to_box(z));
    return is_infeasible(l) ? std::numeric_limits<double>::infinity() : -l;
  };

  EstimationResult result;
  result.names = ctx.parameter_names();
  result.n_effective = ctx.joiners();
  result.loglik = kInfeasible;
  auto& trace = result.trace;
  trace.starts = starts.size();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto z0 = transform.to_free(starts[i]);
    const auto nm = nelder_mead(objective, z0, options.nelder_mead);
    trace.evaluations += nm.evaluations;
    trace.iterations += nm.iterations;
    trace.restarts += nm.restarts;
    if (nm.converged) ++trace.converged_starts;
    const double l = std::isfinite(nm.value) ? -nm.value : kInfeasible;
    trace.start_logliks.push_back(l);
    if (is_infeasible(l)) continue;
    auto x = transform.to_box(nm.x);
    if (is_infeasible(result.loglik) || better(l, x, result.loglik, result.mu_hat)) {
      result.loglik = l;
      result.mu_hat = std::move(x);
      trace.best_start = i;
      trace.converged = nm.converged;
    }
  }
  if (is_infeasible(result.loglik)) throw EstimationError("likelihood is not finite at any probe");

  if (options.canonicalize_phases) {
    auto mu = result.mu_hat;
    for (auto k : ctx.rate_model().phase_indices()) {
      mu[k] = std::fmod(mu[k], kTwoPi);
      if (mu[k] < 0.0) mu[k] += kTwoPi;
    }
    const double l = ctx.loglik(mu);
    if (box.contains(mu) && !is_infeasible(l)) {
      result.mu_hat = mu;
      result.loglik = l;
    }
  }
  return result;
}

std::vector<double> central_hessian(const Objective& f, std::span<const double> x) {
  const std::size_t d = x.size();
  std::vector<double> h(d);
  for (std::size_t k = 0; k < d; ++k) h[k] = 1e-4 * (1.0 + std::abs(x[k]));
  std::vector<double> p(x.begin(), x.end());
  const double f0 = f(p);
  std::vector<double> H(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    p[i] = x[i] + h[i];
    const double up = f(p);
    p[i] = x[i] - h[i];
    const double down = f(p);
    p[i] = x[i];
    H[i * d + i] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < d; ++j) {
      double corner[4];
      const int si[4] = {1, 1, -1, -1};
      const int sj[4] = {1, -1, 1, -1};
      for (int c = 0; c < 4; ++c) {
        p[i] = x[i] + si[c] * h[i];
        p[j] = x[j] + sj[c] * h[j];
        corner[c] = f(p);
      }
      p[i] = x[i];
      p[j] = x[j];
      const double v = (corner[0] - corner[1] - corner[2] + corner[3]) / (4.0 * h[i] * h[j]);
      H[i * d + j] = v;
      H[j * d + i] = v;
    }
  }
  return H;
}

CovarianceEstimate covariance_estimate(const RateModel& rate, const PatienceModel& patience,
                                       const DelayPolicy& policy, int servers,
                                       std::span<const CycleData> cycles,
                                       std::span<const double> mu_hat) {
  if (cycles.empty()) throw EstimationError("covariance needs at least one complete cycle");
  // sum_j q(Z_j, mu) is the log-likelihood of the cycles laid end to end.
  const LikelihoodContext ctx(rate, patience, policy, reassemble(cycles, servers));
  const auto H = central_hessian([&](std::span<const double> m) { return ctx.loglik(m); }, mu_hat);
  return invert_information(H, mu_hat.size(), CovarianceSource::cycles);
}

CovarianceEstimate observed_information_covariance(const LikelihoodContext& ctx,
                                                   std::span<const double> mu_hat) {
  const auto H = central_hessian([&](std::span<const double> m) { return ctx.loglik(m); }, mu_hat);
  return invert_information(H, mu_hat.size(), CovarianceSource::observed_information);
}

EstimationResult estimate(const Observation& obs, const RateModel& rate,
                          const PatienceModel& patience, const DelayPolicy& policy,
                          const EstimatorOptions& options) {
  const LikelihoodContext ctx(rate, patience, policy, obs);
  auto result = fit(ctx, options);
  const auto zeta = find_cycle_boundaries(obs, rate.period());
  const auto cycles = split_cycles(obs, zeta);
  result.cycles = cycles.size();
  if (cycles.size() >= 2 * ctx.arity()) {
    result.covariance =
        covariance_estimate(rate, patience, policy, obs.servers, cycles, result.mu_hat);
  } else {
    result.covariance = observed_information_covariance(ctx, result.mu_hat);
  }
  return result;
}

std::vector<std::pair<double, double>> profile_scan(const LikelihoodContext& ctx,
                                                    std::span<const double> mu, std::size_t axis,
                                                    std::span<const double> grid) {
  if (axis >= mu.size()) throw ParameterError("profile axis out of range");
  std::vector<double> p(mu.begin(), mu.end());
  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid.size());
  for (double v : grid) {
    p[axis] = v;
    curve.emplace_back(v, ctx.loglik(p));
  }
  return curve;
}

}  // namespace balkest
