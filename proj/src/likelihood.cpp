#include "balkest/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "balkest/errors.hpp"

namespace balkest {

double AnnouncementPiece::delta_hi() const {
  return std::max(0.0, delta_lo + slope * (t_hi - t_lo));
}

namespace {

// Neumaier compensated sum; the likelihood adds tens of thousands of terms
// and the covariance takes second differences of it.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    carry_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
    return *this;
  }
  CompensatedSum& operator-=(double x) { return *this += -x; }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

void check_increasing(std::span<const double> arrivals) {
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    if (!(arrivals[i] > arrivals[i - 1])) {
      throw IntegrityError("arrival times are not strictly increasing");
    }
  }
}

void add_piece(AnnouncementPath& path, double lo, double hi, double delta, int slope) {
  if (hi > lo) path.pieces.push_back({lo, hi, delta, slope});
}

// Delta(u) = (v - (u - lo))^+ on [lo, hi].
void add_draining(AnnouncementPath& path, double lo, double hi, double v) {
  if (v > 0.0) {
    const double kink = std::min(hi, lo + v);
    add_piece(path, lo, kink, v, -1);
    add_piece(path, kink, hi, 0.0, 0);
  } else {
    add_piece(path, lo, hi, 0.0, 0);
  }
}

// Cuts a sloped piece where Delta crosses an integer, so a step survival
// S = r^ceil(x) is constant on each part; emits (t_a, t_b, ceil(Delta)).
template <typename Emit>
void split_at_integers(const AnnouncementPiece& p, Emit&& emit) {
  const double d0 = p.delta_lo;
  const double d1 = p.delta_hi();
  std::vector<double> cuts{p.t_lo};
  if (p.slope < 0) {
    for (double j = std::ceil(d0) - 1.0; j > d1; j -= 1.0) cuts.push_back(p.t_lo + (d0 - j));
  } else {
    for (double j = std::floor(d0) + 1.0; j < d1; j += 1.0) cuts.push_back(p.t_lo + (j - d0));
  }
  cuts.push_back(p.t_hi);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = std::min(cuts[k + 1], p.t_hi);
    if (!(b > a)) continue;
    const double mid = std::max(0.0, d0 + p.slope * (0.5 * (a + b) - p.t_lo));
    emit(a, b, mid > 0.0 ? std::ceil(mid) : 0.0);
  }
}

}  // namespace

AnnouncementPath exact_announcements(std::span<const double> arrivals,
                                     std::span<const double> waits,
                                     std::span<const double> jumps, double horizon) {
  if (waits.size() != arrivals.size() || jumps.size() != arrivals.size()) {
    throw IntegrityError("arrivals, waits and jumps differ in length");
  }
  check_increasing(arrivals);
  if (!arrivals.empty() && (arrivals.front() < 0.0 || arrivals.back() > horizon)) {
    throw IntegrityError("arrivals outside [0, horizon]");
  }
  AnnouncementPath path;
  path.horizon = horizon;
  path.points.reserve(arrivals.size());
  path.pieces.reserve(2 * arrivals.size() + 1);
  double lo = 0.0;
  double v = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const double a = arrivals[i];
    path.points.push_back({a, std::max(0.0, v - (a - lo))});
    add_draining(path, lo, a, v);
    lo = a;
    v = waits[i] + jumps[i];
  }
  add_draining(path, lo, horizon, v);
  return path;
}

AnnouncementPath queue_length_announcements(std::span<const double> arrivals,
                                            std::span<const double> departures, double horizon,
                                            const DelayPolicy& policy) {
  if (!policy.depends_on_queue_length()) {
    throw ParameterError("policy " + to_string(policy.kind) + " is not a queue-length announcement");
  }
  check_increasing(arrivals);
  AnnouncementPath path;
  path.horizon = horizon;
  path.points.reserve(arrivals.size());
  path.pieces.reserve(arrivals.size() + departures.size() + 1);
  std::size_t in_system = 0;
  double cur = 0.0;
  std::size_t i = 0;
  std::size_t d = 0;
  while (i < arrivals.size() || d < departures.size()) {
    const bool departure =
        d < departures.size() && (i == arrivals.size() || departures[d] <= arrivals[i]);
    const double t = departure ? departures[d] : arrivals[i];
    if (t < cur) throw IntegrityError("events out of order");
    if (t > horizon) throw IntegrityError("event after the observation horizon");
    add_piece(path, cur, t, policy.for_queue_length(in_system), 0);
    cur = t;
    if (departure) {
      if (in_system == 0) throw IntegrityError("departure from an empty system");
      --in_system;
      ++d;
    } else {
      path.points.push_back({t, policy.for_queue_length(in_system)});
      ++in_system;
      ++i;
    }
  }
  add_piece(path, cur, horizon, policy.for_queue_length(in_system), 0);
  return path;
}

AnnouncementPath max_wait_announcements(std::span<const double> arrivals,
                                        std::span<const double> waits, double horizon) {
  if (waits.size() != arrivals.size()) throw IntegrityError("arrivals and waits differ in length");
  check_increasing(arrivals);
  AnnouncementPath path;
  path.horizon = horizon;
  std::deque<std::pair<double, double>> line;  // (arrival, start) of queued joiners
  double cur = 0.0;
  auto advance = [&](double t) {
    if (line.empty()) {
      add_piece(path, cur, t, 0.0, 0);
    } else {
      add_piece(path, cur, t, cur - line.front().first, 1);
    }
    cur = t;
  };
  std::size_t i = 0;
  for (;;) {
    const double next_arrival = i < arrivals.size() ? arrivals[i] : horizon;
    if (!line.empty() && line.front().second <= next_arrival) {
      advance(line.front().second);
      line.pop_front();
      continue;
    }
    if (i == arrivals.size()) break;
    advance(next_arrival);
    path.points.push_back({next_arrival, line.empty() ? 0.0 : next_arrival - line.front().first});
    if (waits[i] > 0.0) line.emplace_back(next_arrival, next_arrival + waits[i]);
    ++i;
  }
  advance(horizon);
  return path;
}

AnnouncementPath announcement_path(const Observation& obs, const DelayPolicy& policy) {
  switch (policy.kind) {
    case DelayKind::exact_vwt:
      return exact_announcements(obs.arrivals, obs.waits, obs.jumps, obs.horizon);
    case DelayKind::expected_delay_proxy:
    case DelayKind::completions_count:
      return queue_length_announcements(obs.arrivals, obs.departures, obs.horizon, policy);
    case DelayKind::max_wait_so_far:
      return max_wait_announcements(obs.arrivals, obs.waits, obs.horizon);
  }
  throw ParameterError("unknown policy");
}

AnnouncementPath announcement_path(const CycleData& cycle, int servers,
                                   const DelayPolicy& policy) {
  Observation obs;
  obs.servers = servers;
  obs.arrivals = cycle.arrivals;
  obs.waits = cycle.waits;
  obs.jumps = cycle.jumps;
  obs.departures = cycle.departures;
  obs.horizon = cycle.R;
  return announcement_path(obs, policy);
}

double piece_integral(const BoundRate& rate, const BoundPatience& patience,
                      const AnnouncementPiece& piece, const QuadratureSettings& quad) {
  if (piece.slope == 0 || patience.family() == PatienceFamily::none) {
    return patience.survival(piece.delta_lo) * rate.integral(piece.t_lo, piece.t_hi);
  }
  const double m = piece.length();
  if (patience.is_exp_mixture()) {
    // Integrate from the end where Delta is smallest so every exponential
    // factor stays in (0, 1].
    const bool down = piece.slope < 0;
    const double t_ref = down ? piece.t_hi : piece.t_lo;
    const double t_far = down ? piece.t_lo : piece.t_hi;
    const double d_ref = down ? piece.delta_hi() : piece.delta_lo;
    const double dir = down ? -1.0 : 1.0;
    double total = 0.0;
    for (const auto& c : patience.mixture()) {
      const double r = c.rate;
      const double em = std::exp(-r * m);
      double value = r > 0.0 ? rate.base() * (-std::expm1(-r * m)) / r : rate.base() * m;
      for (std::size_t k = 0; k < rate.term_count(); ++k) {
        const double w = rate.frequency(k);
        const double beta = dir * w;
        const double psi0 = rate.phase(k) - w * t_ref;
        const double psim = rate.phase(k) - w * t_far;
        value += rate.amplitude(k) *
                 (em * (-r * std::sin(psim) + beta * std::cos(psim)) -
                  (-r * std::sin(psi0) + beta * std::cos(psi0))) /
                 (r * r + beta * beta);
      }
      total += c.weight * std::exp(-r * d_ref) * value;
    }
    return total;
  }
  if (patience.family() == PatienceFamily::geometric) {
    double total = 0.0;
    split_at_integers(piece, [&](double a, double b, double level) {
      total += std::pow(patience.step_ratio(), level) * rate.integral(a, b);
    });
    return total;
  }
  const auto integrand = [&](double u) {
    return rate.rate_at(u) *
           patience.survival(piece.delta_lo + piece.slope * (u - piece.t_lo));
  };
  return integrate(integrand, piece.t_lo, piece.t_hi, quad);
}

double loglik_path(const RateModel& rate, const PatienceModel& patience,
                   const AnnouncementPath& path, std::span<const double> mu,
                   const QuadratureSettings& quad) {
  if (mu.size() != rate.arity() + patience.arity()) {
    throw ParameterError("parameter vector has the wrong length");
  }
  const auto alpha = mu.first(rate.arity());
  const auto theta = mu.subspan(rate.arity());
  if (!rate.is_valid(alpha) || !patience.in_domain(theta)) return kInfeasible;
  const BoundRate lam = rate.bind(alpha);
  const BoundPatience surv = patience.bind(theta);
  double total = 0.0;
  for (const auto& p : path.points) {
    const double ls = surv.log_survival(p.delta);
    if (is_infeasible(ls)) return kInfeasible;
    total += std::log(lam.rate_at(p.time)) + ls;
  }
  for (const auto& piece : path.pieces) total -= piece_integral(lam, surv, piece, quad);
  return std::isnan(total) ? kInfeasible : total;
}

LikelihoodContext::LikelihoodContext(RateModel rate, PatienceModel patience, DelayPolicy policy,
                                     const Observation& obs, QuadratureSettings quad)
    : rate_(std::move(rate)),
      patience_(std::move(patience)),
      policy_(policy),
      quad_(quad),
      path_(announcement_path(obs, policy)) {
  compile();
}

std::vector<std::string> LikelihoodContext::parameter_names() const {
  auto names = rate_.parameter_names();
  for (auto& n : patience_.parameter_names()) names.push_back(n);
  return names;
}

LikelihoodContext::Linear& LikelihoodContext::linear_slot(std::map<double, Linear>& groups,
                                                          double key) {
  auto [it, fresh] = groups.try_emplace(key);
  if (fresh) {
    it->second.dcos.assign(frequencies_.size(), 0.0);
    it->second.dsin.assign(frequencies_.size(), 0.0);
  }
  return it->second;
}

void LikelihoodContext::add_linear(Linear& slot, double t_lo, double t_hi) const {
  slot.length += t_hi - t_lo;
  for (std::size_t k = 0; k < frequencies_.size(); ++k) {
    const double w = frequencies_[k];
    slot.dcos[k] += std::cos(w * t_hi) - std::cos(w * t_lo);
    slot.dsin[k] += std::sin(w * t_hi) - std::sin(w * t_lo);
  }
}

double LikelihoodContext::linear_value(const Linear& slot, const BoundRate& rate) const {
  double value = rate.base() * slot.length;
  for (std::size_t k = 0; k < frequencies_.size(); ++k) {
    const double phi = rate.phase(k);
    value += rate.amplitude(k) / frequencies_[k] *
             (std::cos(phi) * slot.dcos[k] + std::sin(phi) * slot.dsin[k]);
  }
  return value;
}

void LikelihoodContext::compile() {
  for (const auto& term : rate_.terms()) frequencies_.push_back(term.frequency);
  const std::size_t K = frequencies_.size();
  const auto family = patience_.family();

  point_cos_.reserve(path_.points.size() * K);
  point_sin_.reserve(path_.points.size() * K);
  for (const auto& p : path_.points) {
    for (double w : frequencies_) {
      point_cos_.push_back(std::cos(w * p.time));
      point_sin_.push_back(std::sin(w * p.time));
    }
    point_delta_sum_ += p.delta;
    if (p.delta > 0.0) point_level_sum_ += std::ceil(p.delta);
  }

  for (const auto& piece : path_.pieces) {
    if (family == PatienceFamily::none) {
      add_linear(linear_slot(flat_, 0.0), piece.t_lo, piece.t_hi);
    } else if (family == PatienceFamily::geometric) {
      if (piece.slope == 0) {
        const double level = piece.delta_lo > 0.0 ? std::ceil(piece.delta_lo) : 0.0;
        add_linear(linear_slot(levels_, level), piece.t_lo, piece.t_hi);
      } else {
        split_at_integers(piece, [&](double a, double b, double level) {
          add_linear(linear_slot(levels_, level), a, b);
        });
      }
    } else if (piece.slope == 0) {
      add_linear(linear_slot(flat_, piece.delta_lo), piece.t_lo, piece.t_hi);
    } else {
      Sloped s{piece, {}, {}, {}, {}};
      for (double w : frequencies_) {
        s.cos_lo.push_back(std::cos(w * piece.t_lo));
        s.sin_lo.push_back(std::sin(w * piece.t_lo));
        s.cos_hi.push_back(std::cos(w * piece.t_hi));
        s.sin_hi.push_back(std::sin(w * piece.t_hi));
      }
      sloped_.push_back(std::move(s));
    }
  }
}

double LikelihoodContext::loglik(std::span<const double> mu) const {
  if (mu.size() != arity()) throw ParameterError("parameter vector has the wrong length");
  const auto alpha = mu.first(rate_.arity());
  const auto theta = mu.subspan(rate_.arity());
  if (!rate_.is_valid(alpha) || !patience_.in_domain(theta)) return kInfeasible;
  const BoundRate lam = rate_.bind(alpha);
  const BoundPatience surv = patience_.bind(theta);
  const std::size_t K = frequencies_.size();

  std::vector<double> amp(K), cphi(K), sphi(K);
  for (std::size_t k = 0; k < K; ++k) {
    amp[k] = lam.amplitude(k);
    cphi[k] = std::cos(lam.phase(k));
    sphi[k] = std::sin(lam.phase(k));
  }

  // Arrival terms.
  CompensatedSum total;
  for (std::size_t i = 0; i < path_.points.size(); ++i) {
    double value = lam.base();
    for (std::size_t k = 0; k < K; ++k) {
      value += amp[k] * (sphi[k] * point_cos_[i * K + k] - cphi[k] * point_sin_[i * K + k]);
    }
    total += std::log(value);
  }
  switch (patience_.family()) {
    case PatienceFamily::none: break;
    case PatienceFamily::exponential: total -= theta[0] * point_delta_sum_; break;
    case PatienceFamily::geometric: total += point_level_sum_ * std::log1p(-theta[0]); break;
    default:
      for (const auto& p : path_.points) total += surv.log_survival(p.delta);
      break;
  }

  // Piecewise-constant survival.
  for (const auto& [delta, slot] : flat_) total -= surv.survival(delta) * linear_value(slot, lam);
  for (const auto& [level, slot] : levels_) {
    total -= std::pow(surv.step_ratio(), level) * linear_value(slot, lam);
  }

  // Sloped pieces.
  if (surv.is_exp_mixture()) {
    for (const auto& s : sloped_) {
      const auto& p = s.piece;
      const double m = p.length();
      const bool down = p.slope < 0;
      const double d_ref = down ? p.delta_hi() : p.delta_lo;
      const double dir = down ? -1.0 : 1.0;
      const auto& c_ref = down ? s.cos_hi : s.cos_lo;
      const auto& s_ref = down ? s.sin_hi : s.sin_lo;
      const auto& c_far = down ? s.cos_lo : s.cos_hi;
      const auto& s_far = down ? s.sin_lo : s.sin_hi;
      for (const auto& comp : surv.mixture()) {
        const double r = comp.rate;
        const double em = std::exp(-r * m);
        double value = r > 0.0 ? lam.base() * (-std::expm1(-r * m)) / r : lam.base() * m;
        for (std::size_t k = 0; k < K; ++k) {
          const double beta = dir * frequencies_[k];
          // sin/cos(phi - w t) from the cached cos/sin(w t).
          const double sin0 = sphi[k] * c_ref[k] - cphi[k] * s_ref[k];
          const double cos0 = cphi[k] * c_ref[k] + sphi[k] * s_ref[k];
          const double sinm = sphi[k] * c_far[k] - cphi[k] * s_far[k];
          const double cosm = cphi[k] * c_far[k] + sphi[k] * s_far[k];
          value += amp[k] * (em * (-r * sinm + beta * cosm) - (-r * sin0 + beta * cos0)) /
                   (r * r + beta * beta);
        }
        total -= comp.weight * std::exp(-r * d_ref) * value;
      }
    }
  } else {
    for (const auto& s : sloped_) total -= piece_integral(lam, surv, s.piece, quad_);
  }
  const double value = total.value();
  return std::isnan(value) ? kInfeasible : value;
}

double loglik_exact(const RateModel& rate, const PatienceModel& patience, const Observation& obs,
                    std::span<const double> mu, const QuadratureSettings& quad) {
  const LikelihoodContext ctx(rate, patience, {DelayKind::exact_vwt, 1.0, obs.servers}, obs, quad);
  return ctx.loglik(mu);
}

double loglik_queue_length(const RateModel& rate, const PatienceModel& patience,
                           const DelayPolicy& policy, const Observation& obs,
                           std::span<const double> mu) {
  if (!policy.depends_on_queue_length()) {
    throw ParameterError("policy " + to_string(policy.kind) + " is not a queue-length announcement");
  }
  const LikelihoodContext ctx(rate, patience, policy, obs);
  return ctx.loglik(mu);
}

double q_of_cycle(const RateModel& rate, const PatienceModel& patience, const CycleData& cycle,
                  std::span<const double> mu, const QuadratureSettings& quad) {
  const auto path = exact_announcements(cycle.arrivals, cycle.waits, cycle.jumps, cycle.R);
  return loglik_path(rate, patience, path, mu, quad);
}

double q_of_cycle_general(const RateModel& rate, const PatienceModel& patience,
                          const DelayPolicy& policy, int servers, const CycleData& cycle,
                          std::span<const double> mu, const QuadratureSettings& quad) {
  return loglik_path(rate, patience, announcement_path(cycle, servers, policy), mu, quad);
}

std::vector<double> central_gradient(const Objective& f, std::span<const double> x) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x[k]));
    probe[k] = x[k] + h;
    const double up = f(probe);
    probe[k] = x[k] - h;
    const double down = f(probe);
    probe[k] = x[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<double> score_at(const LikelihoodContext& ctx, std::span<const double> mu) {
  return central_gradient([&](std::span<const double> m) { return ctx.loglik(m); }, mu);
}

}  // namespace balkest
