#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "balkest/patience_model.hpp"
#include "balkest/quadrature.hpp"
#include "balkest/rate_model.hpp"
#include "balkest/regeneration.hpp"
#include "balkest/simulator.hpp"

namespace balkest {

// Returned for parameters under which the data are impossible or which leave
// the model's domain.
inline constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

inline bool is_infeasible(double value) { return !(value > kInfeasible); }

// Announcement seen by a joiner at `time`.
struct AnnouncedPoint {
  double time = 0.0;
  double delta = 0.0;
};

// Delta(u) = delta_lo + slope * (u - t_lo) on [t_lo, t_hi], slope in {-1, 0, 1},
// and never negative inside the piece: decreasing paths are split where they
// reach zero.
struct AnnouncementPiece {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double delta_lo = 0.0;
  int slope = 0;

  double length() const { return t_hi - t_lo; }
  double delta_hi() const;
};

// The announcement process Delta(t) along an observed path started empty at
// 0: its values at the joiners' arrival instants (left limits) and its
// trajectory on [0, horizon] split into pieces that tile the interval.
struct AnnouncementPath {
  std::vector<AnnouncedPoint> points;
  std::vector<AnnouncementPiece> pieces;
  double horizon = 0.0;
};

// Exact virtual waiting time: after a joiner at a_i, Delta(a_i + u) = (W_i + X_i - u)^+.
AnnouncementPath exact_announcements(std::span<const double> arrivals,
                                     std::span<const double> waits,
                                     std::span<const double> jumps, double horizon);
// psi(L) for the queue-length announcements, L replayed from arrivals and
// departures (departures first on ties).
AnnouncementPath queue_length_announcements(std::span<const double> arrivals,
                                            std::span<const double> departures, double horizon,
                                            const DelayPolicy& policy);
// Head-of-line delay: time already waited by the first customer still queued.
AnnouncementPath max_wait_announcements(std::span<const double> arrivals,
                                        std::span<const double> waits, double horizon);

AnnouncementPath announcement_path(const Observation& obs, const DelayPolicy& policy);
AnnouncementPath announcement_path(const CycleData& cycle, int servers, const DelayPolicy& policy);

// Integral of lambda(u) * S(Delta(u)) over one piece, evaluated directly from
// the bound models (closed forms for exponential mixtures and geometric
// patience, adaptive quadrature otherwise).
double piece_integral(const BoundRate& rate, const BoundPatience& patience,
                      const AnnouncementPiece& piece, const QuadratureSettings& quad = {});

// Uncached log-likelihood of an announcement path:
//   sum_i [log lambda(t_i) + log S(delta_i)] - sum_pieces int lambda S(Delta).
double loglik_path(const RateModel& rate, const PatienceModel& patience,
                   const AnnouncementPath& path, std::span<const double> mu,
                   const QuadratureSettings& quad = {});

// Log-likelihood of one observed path under a fixed rate model, patience
// family and announcement policy, with the data-dependent pieces
// precomputed so repeated evaluation at different mu is cheap.
class LikelihoodContext {
 public:
  LikelihoodContext(RateModel rate, PatienceModel patience, DelayPolicy policy,
                    const Observation& obs, QuadratureSettings quad = {});

  std::size_t arity() const { return rate_.arity() + patience_.arity(); }
  std::size_t rate_arity() const { return rate_.arity(); }
  std::vector<std::string> parameter_names() const;
  const RateModel& rate_model() const { return rate_; }
  const PatienceModel& patience_model() const { return patience_; }
  const DelayPolicy& policy() const { return policy_; }
  const AnnouncementPath& path() const { return path_; }
  std::size_t joiners() const { return path_.points.size(); }
  double horizon() const { return path_.horizon; }

  // kInfeasible when mu is outside the model's domain.
  double loglik(std::span<const double> mu) const;

 private:
  struct Linear {
    double length = 0.0;
    std::vector<double> dcos;  // sum over pieces of cos(w t_hi) - cos(w t_lo)
    std::vector<double> dsin;
  };
  struct Sloped {
    AnnouncementPiece piece;
    std::vector<double> cos_lo, sin_lo, cos_hi, sin_hi;
  };

  void compile();
  Linear& linear_slot(std::map<double, Linear>& groups, double key);
  void add_linear(Linear& slot, double t_lo, double t_hi) const;
  double linear_value(const Linear& slot, const BoundRate& rate) const;

  RateModel rate_;
  PatienceModel patience_;
  DelayPolicy policy_;
  QuadratureSettings quad_;
  AnnouncementPath path_;

  std::vector<double> frequencies_;
  std::vector<double> point_cos_, point_sin_;  // [i * K + k]
  double point_delta_sum_ = 0.0;
  double point_level_sum_ = 0.0;  // sum of ceil(delta) for geometric patience
  std::map<double, Linear> flat_;     // keyed by the constant announcement
  std::map<double, Linear> levels_;   // geometric only: keyed by ceil(Delta)
  std::vector<Sloped> sloped_;
};

double loglik_exact(const RateModel& rate, const PatienceModel& patience, const Observation& obs,
                    std::span<const double> mu, const QuadratureSettings& quad = {});
// Throws ParameterError unless the policy depends only on the number in system.
double loglik_queue_length(const RateModel& rate, const PatienceModel& patience,
                           const DelayPolicy& policy, const Observation& obs,
                           std::span<const double> mu);

// Contribution of one regeneration cycle under the exact virtual waiting time.
double q_of_cycle(const RateModel& rate, const PatienceModel& patience, const CycleData& cycle,
                  std::span<const double> mu, const QuadratureSettings& quad = {});
// Same for any announcement policy; the announcement path is rebuilt from the
// cycle's own data.
double q_of_cycle_general(const RateModel& rate, const PatienceModel& patience,
                          const DelayPolicy& policy, int servers, const CycleData& cycle,
                          std::span<const double> mu, const QuadratureSettings& quad = {});

using Objective = std::function<double(std::span<const double>)>;

// Central differences with h_k = max(1e-6, 1e-6 |x_k|).
std::vector<double> central_gradient(const Objective& f, std::span<const double> x);

std::vector<double> score_at(const LikelihoodContext& ctx, std::span<const double> mu);

}  // namespace balkest
