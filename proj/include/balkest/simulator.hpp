#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "balkest/patience_model.hpp"
#include "balkest/random.hpp"
#include "balkest/rate_model.hpp"

namespace balkest {

// Complete state R(t) of the queue: residual service times, the first
// min(L, s) for customers in service and the rest, in FCFS order, equal to
// the full requirements of waiting customers.
struct SystemState {
  int servers = 1;
  double clock = 0.0;
  std::vector<double> residuals;
  // Time already spent waiting by each queued customer (positions s+1..L),
  // in FCFS order. Only the max_wait_so_far announcement reads it.
  std::vector<double> queued_waits;

  std::size_t size() const { return residuals.size(); }
};

// Time until the number in system can drop below s if nobody else joins:
// drain the s servers with the known residuals, feeding waiting customers
// FCFS. Zero whenever L < s.
double virtual_waiting_time(const SystemState& state);

enum class DelayKind { exact_vwt, expected_delay_proxy, completions_count, max_wait_so_far };

std::string to_string(DelayKind kind);
DelayKind delay_kind_from_string(const std::string& name);

// Delay announcement psi mapping the (pre-arrival) state to a nonnegative
// number shown to an arriving customer.
struct DelayPolicy {
  DelayKind kind = DelayKind::exact_vwt;
  double service_mean = 1.0;
  int servers = 1;

  // True when psi depends on the state only through the number in system.
  bool depends_on_queue_length() const {
    return kind == DelayKind::expected_delay_proxy || kind == DelayKind::completions_count;
  }
  // psi as a function of L, for the queue-length kinds.
  double for_queue_length(std::size_t in_system) const;
};

double announce(const DelayPolicy& policy, const SystemState& state);

struct ThinningStats {
  std::uint64_t candidates = 0;
  std::uint64_t accepted = 0;
};

// Next point after t of a Poisson process with intensity lambda_alpha, by
// thinning candidates generated at the constant rate upper_bound().
double next_potential_arrival(Rng& rng, const BoundRate& rate, double t,
                              ThinningStats* stats = nullptr);
double next_potential_arrival(Rng& rng, const RateModel& model, std::span<const double> alpha,
                              double t, ThinningStats* stats = nullptr);

// One customer that joined.
struct JoinRecord {
  double time = 0.0;       // effective arrival time
  double announced = 0.0;  // delay announcement seen on arrival
  double wait = 0.0;       // W_i = V(time-)
  double jump = 0.0;       // X_i = V(time) - V(time-)
  double service = 0.0;    // B_i

  double start() const { return time + wait; }
  double departure() const { return time + wait + service; }
};

// Ground truth only; never reaches the estimator.
struct BalkRecord {
  double time = 0.0;
  double announced = 0.0;
  double patience = 0.0;
};

struct QueueStep {
  double time = 0.0;
  int count = 0;
};

struct SimulationLog {
  int servers = 1;
  DelayKind policy = DelayKind::exact_vwt;
  std::vector<JoinRecord> joins;
  // Departure times of all joiners, sorted; may extend beyond the horizon.
  std::vector<double> departures;
  std::vector<QueueStep> queue_length_path;
  std::vector<BalkRecord> balks;
  double horizon = 0.0;
  std::size_t total_arrivals = 0;
  ThinningStats thinning;

  double balk_fraction() const {
    return total_arrivals == 0 ? 0.0
                               : static_cast<double>(balks.size()) /
                                     static_cast<double>(total_arrivals);
  }
};

// The part of a simulated path visible to the system operator: joiners and
// their departures up to the horizon. Balkers are absent by construction.
struct Observation {
  int servers = 1;
  std::vector<double> arrivals;
  std::vector<double> waits;
  std::vector<double> jumps;
  std::vector<double> departures;  // sorted, all <= horizon
  double horizon = 0.0;

  std::size_t size() const { return arrivals.size(); }
};

Observation observe(const SimulationLog& log);

// Restricts an observation to [0, t_end].
Observation truncate(const Observation& obs, double t_end);

struct SimulationConfig {
  RateModel rate = RateModel::constant();
  std::vector<double> alpha{1.0};
  PatienceModel patience = PatienceModel::none();
  std::vector<double> theta;
  ServiceModel service = ServiceModel::exponential(1.0);
  int servers = 1;
  DelayKind policy = DelayKind::exact_vwt;
  // Stop after this many potential arrivals (balking + joining) ...
  std::optional<std::size_t> total_arrivals;
  // ... or at this time, whichever comes first. At least one is required.
  std::optional<double> horizon;

  DelayPolicy delay_policy() const { return {policy, service.mean(), servers}; }
};

// Throws ConfigError for an unusable configuration.
void validate_simulation_config(const SimulationConfig& config);

// Event loop of the M_t/G/s+H queue started empty at t = 0. Every potential
// arrival draws a patience Y and a requirement B and joins iff
// Y >= announcement(state at t-). Departures at the same instant as an
// arrival are processed first.
SimulationLog simulate(const SimulationConfig& config, std::uint64_t seed);

// Rebuilds R(t-) at time t (departures at t already gone) from a log.
SystemState state_before(const SimulationLog& log, double t);

// Piecewise-constant number in system from arrivals (+1) and departures (-1),
// departures first on ties. Throws IntegrityError if the count goes negative.
std::vector<QueueStep> replay_queue_length(const SimulationLog& log);
std::vector<QueueStep> replay_queue_length(std::span<const double> arrivals,
                                           std::span<const double> departures);

}  // namespace balkest
