#include "balkest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>

#include "balkest/errors.hpp"

namespace balkest {

namespace {

using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;

}  // namespace

double virtual_waiting_time(const SystemState& state) {
  const std::size_t s = static_cast<std::size_t>(state.servers);
  if (state.size() < s) return 0.0;
  MinHeap free_at;
  for (std::size_t k = 0; k < s; ++k) free_at.push(state.residuals[k]);
  for (std::size_t k = s; k < state.size(); ++k) {
    const double f = free_at.top();
    free_at.pop();
    free_at.push(f + state.residuals[k]);
  }
  return free_at.top();
}

std::string to_string(DelayKind kind) {
  switch (kind) {
    case DelayKind::exact_vwt: return "exact_vwt";
    case DelayKind::expected_delay_proxy: return "expected_delay_proxy";
    case DelayKind::completions_count: return "completions_count";
    case DelayKind::max_wait_so_far: return "max_wait_so_far";
  }
  return "unknown";
}

DelayKind delay_kind_from_string(const std::string& name) {
  if (name == "exact_vwt") return DelayKind::exact_vwt;
  if (name == "expected_delay_proxy") return DelayKind::expected_delay_proxy;
  if (name == "completions_count") return DelayKind::completions_count;
  if (name == "max_wait_so_far") return DelayKind::max_wait_so_far;
  throw ConfigError("unknown delay policy '" + name + "'");
}

double DelayPolicy::for_queue_length(std::size_t in_system) const {
  const long excess = static_cast<long>(in_system) - servers + 1;
  if (excess <= 0) return 0.0;
  const double n = static_cast<double>(excess);
  if (kind == DelayKind::expected_delay_proxy) return n * service_mean / servers;
  return n;
}

double announce(const DelayPolicy& policy, const SystemState& state) {
  switch (policy.kind) {
    case DelayKind::exact_vwt: return virtual_waiting_time(state);
    case DelayKind::expected_delay_proxy:
    case DelayKind::completions_count: return policy.for_queue_length(state.size());
    case DelayKind::max_wait_so_far: {
      double longest = 0.0;
      for (double w : state.queued_waits) longest = std::max(longest, w);
      return longest;
    }
  }
  return 0.0;
}

double next_potential_arrival(Rng& rng, const BoundRate& rate, double t, ThinningStats* stats) {
  const double top = rate.upper_bound();
  std::exponential_distribution<double> gap(top);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    t += gap(rng);
    if (stats) ++stats->candidates;
    if (unit(rng) * top <= rate.rate_at(t)) {
      if (stats) ++stats->accepted;
      return t;
    }
  }
}

double next_potential_arrival(Rng& rng, const RateModel& model, std::span<const double> alpha,
                              double t, ThinningStats* stats) {
  return next_potential_arrival(rng, model.bind(alpha), t, stats);
}

Observation observe(const SimulationLog& log) {
  Observation obs;
  obs.servers = log.servers;
  obs.horizon = log.horizon;
  obs.arrivals.reserve(log.joins.size());
  obs.waits.reserve(log.joins.size());
  obs.jumps.reserve(log.joins.size());
  for (const auto& j : log.joins) {
    obs.arrivals.push_back(j.time);
    obs.waits.push_back(j.wait);
    obs.jumps.push_back(j.jump);
  }
  for (double d : log.departures) {
    if (d <= log.horizon) obs.departures.push_back(d);
  }
  return obs;
}

Observation truncate(const Observation& obs, double t_end) {
  Observation out;
  out.servers = obs.servers;
  out.horizon = t_end;
  for (std::size_t i = 0; i < obs.size() && obs.arrivals[i] < t_end; ++i) {
    out.arrivals.push_back(obs.arrivals[i]);
    out.waits.push_back(obs.waits[i]);
    out.jumps.push_back(obs.jumps[i]);
  }
  for (double d : obs.departures) {
    if (d > t_end) break;
    out.departures.push_back(d);
  }
  return out;
}

void validate_simulation_config(const SimulationConfig& config) {
  if (config.servers < 1) throw ConfigError("server count must be at least 1");
  if (!config.total_arrivals && !config.horizon) {
    throw ConfigError("simulation needs total_arrivals or a horizon");
  }
  if (config.total_arrivals && *config.total_arrivals == 0) {
    throw ConfigError("total_arrivals must be positive");
  }
  if (config.horizon && !(*config.horizon > 0.0 && std::isfinite(*config.horizon))) {
    throw ConfigError("horizon must be positive and finite");
  }
  try {
    config.rate.validate(config.alpha);
    config.patience.validate(config.theta);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

SimulationLog simulate(const SimulationConfig& config, std::uint64_t seed) {
  validate_simulation_config(config);
  const BoundRate rate = config.rate.bind(config.alpha);
  const BoundPatience patience = config.patience.bind(config.theta);
  const DelayPolicy policy = config.delay_policy();
  const bool unbounded_patience = config.patience.family() == PatienceFamily::none;
  const std::size_t s = static_cast<std::size_t>(config.servers);
  const std::size_t limit =
      config.total_arrivals.value_or(std::numeric_limits<std::size_t>::max());
  const double horizon = config.horizon.value_or(std::numeric_limits<double>::infinity());

  StreamSet streams(seed);
  SimulationLog log;
  log.servers = config.servers;
  log.policy = config.policy;

  // Servers' next free instants; the smallest is when a new joiner starts.
  MinHeap free_at;
  for (std::size_t k = 0; k < s; ++k) free_at.push(0.0);
  MinHeap pending;                            // departure times still in the future
  std::deque<std::pair<double, double>> line;  // (arrival, start) of joiners not yet in service

  double t = 0.0;
  double last = 0.0;
  while (log.total_arrivals < limit) {
    t = next_potential_arrival(streams.arrivals, rate, t, &log.thinning);
    if (t > horizon) break;
    last = t;
    ++log.total_arrivals;

    while (!pending.empty() && pending.top() <= t) {
      log.departures.push_back(pending.top());
      pending.pop();
    }
    while (!line.empty() && line.front().second <= t) line.pop_front();

    const double y = patience.sample(streams.patience);
    double b = config.service.sample(streams.service);
    if (std::isnan(y) || (!unbounded_patience && !std::isfinite(y)) || !std::isfinite(b)) {
      throw SimulationFault("non-finite patience or service draw");
    }

    const double vwt = std::max(0.0, free_at.top() - t);
    double delta = 0.0;
    switch (policy.kind) {
      case DelayKind::exact_vwt: delta = vwt; break;
      case DelayKind::expected_delay_proxy:
      case DelayKind::completions_count: delta = policy.for_queue_length(pending.size()); break;
      case DelayKind::max_wait_so_far: delta = line.empty() ? 0.0 : t - line.front().first; break;
    }

    if (!(y >= delta)) {
      log.balks.push_back({t, delta, y});
      continue;
    }

    const double start = std::max(t, free_at.top());
    free_at.pop();
    double done = start + b;
    // Requirements below the resolution of `start` (heavy-tailed gamma shapes
    // produce them) would depart at their own arrival instant.
    if (!(done > start)) {
      done = std::nextafter(start, std::numeric_limits<double>::infinity());
      b = done - start;
    }
    free_at.push(done);
    pending.push(done);
    if (start > t) line.emplace_back(t, start);

    JoinRecord rec;
    rec.time = t;
    rec.announced = delta;
    rec.wait = start - t;
    rec.jump = std::max(0.0, free_at.top() - t) - rec.wait;
    rec.service = b;
    // For s = 1 the jump is the requirement itself; keep it exact.
    if (s == 1) rec.jump = b;
    log.joins.push_back(rec);
  }

  log.horizon = config.horizon && log.total_arrivals < limit ? horizon : last;
  while (!pending.empty()) {
    log.departures.push_back(pending.top());
    pending.pop();
  }

  std::vector<double> arrivals;
  arrivals.reserve(log.joins.size());
  for (const auto& j : log.joins) arrivals.push_back(j.time);
  std::vector<double> seen;
  for (double d : log.departures) {
    if (d <= log.horizon) seen.push_back(d);
  }
  log.queue_length_path = replay_queue_length(arrivals, seen);
  return log;
}

SystemState state_before(const SimulationLog& log, double t) {
  SystemState state;
  state.servers = log.servers;
  state.clock = t;
  std::vector<double> queued;
  for (const auto& j : log.joins) {
    if (j.time >= t) break;
    if (j.departure() <= t) continue;
    if (j.start() <= t) {
      state.residuals.push_back(j.departure() - t);
    } else {
      queued.push_back(j.service);
      state.queued_waits.push_back(t - j.time);
    }
  }
  state.residuals.insert(state.residuals.end(), queued.begin(), queued.end());
  return state;
}

std::vector<QueueStep> replay_queue_length(std::span<const double> arrivals,
                                           std::span<const double> departures) {
  std::vector<QueueStep> path;
  if (arrivals.empty() && departures.empty()) return path;
  path.reserve(arrivals.size() + departures.size() + 1);
  path.push_back({0.0, 0});
  int count = 0;
  std::size_t i = 0;
  std::size_t d = 0;
  while (i < arrivals.size() || d < departures.size()) {
    if (d < departures.size() && (i == arrivals.size() || departures[d] <= arrivals[i])) {
      if (d > 0 && departures[d] < departures[d - 1]) {
        throw IntegrityError("departure times are not sorted");
      }
      --count;
      if (count < 0) throw IntegrityError("departure without a matching arrival");
      path.push_back({departures[d++], count});
    } else {
      if (i > 0 && arrivals[i] <= arrivals[i - 1]) {
        throw IntegrityError("arrival times are not strictly increasing");
      }
      ++count;
      path.push_back({arrivals[i++], count});
    }
  }
  return path;
}

std::vector<QueueStep> replay_queue_length(const SimulationLog& log) {
  std::vector<double> arrivals;
  arrivals.reserve(log.joins.size());
  for (const auto& j : log.joins) arrivals.push_back(j.time);
  std::vector<double> departures;
  for (double d : log.departures) {
    if (d <= log.horizon) departures.push_back(d);
  }
  return replay_queue_length(arrivals, departures);
}

}  // namespace balkest
