#include "balkest/regeneration.hpp"

#include <numeric>

#include "balkest/errors.hpp"

namespace balkest {

double CycleData::sum_waits() const { return std::accumulate(waits.begin(), waits.end(), 0.0); }

std::vector<double> find_cycle_boundaries(const Observation& obs, double period) {
  if (!(period > 0.0)) throw ParameterError("period must be positive");
  std::vector<double> zeta{0.0};
  std::size_t a = 0;
  std::size_t d = 0;
  for (long k = 1;; ++k) {
    const double t = static_cast<double>(k) * period;
    if (t > obs.horizon) break;
    while (a < obs.arrivals.size() && obs.arrivals[a] < t) ++a;
    while (d < obs.departures.size() && obs.departures[d] <= t) ++d;
    if (a == d) zeta.push_back(t);
  }
  return zeta;
}

namespace {

CycleData slice(const Observation& obs, double start, double end, bool closed_end) {
  CycleData c;
  c.R = end - start;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double a = obs.arrivals[i];
    if (a < start) continue;
    if (a >= end) break;
    c.arrivals.push_back(a - start);
    c.waits.push_back(obs.waits[i]);
    c.jumps.push_back(obs.jumps[i]);
  }
  for (double d : obs.departures) {
    if (d <= start) continue;
    if (d > end || (!closed_end && d == end)) break;
    c.departures.push_back(d - start);
  }
  return c;
}

}  // namespace

std::vector<CycleData> split_cycles(const Observation& obs, std::span<const double> boundaries) {
  std::vector<CycleData> cycles;
  if (boundaries.size() < 2) return cycles;
  cycles.reserve(boundaries.size() - 1);
  // One pass with running indices; the slice() helper would be quadratic.
  std::size_t i = 0;
  std::size_t d = 0;
  for (std::size_t j = 1; j < boundaries.size(); ++j) {
    const double start = boundaries[j - 1];
    const double end = boundaries[j];
    if (!(end > start)) throw OrderingError("cycle boundaries must be strictly increasing");
    CycleData c;
    c.R = end - start;
    for (; i < obs.size() && obs.arrivals[i] < end; ++i) {
      c.arrivals.push_back(obs.arrivals[i] - start);
      c.waits.push_back(obs.waits[i]);
      c.jumps.push_back(obs.jumps[i]);
    }
    for (; d < obs.departures.size() && obs.departures[d] <= end; ++d) {
      c.departures.push_back(obs.departures[d] - start);
    }
    if (c.departures.size() != c.arrivals.size()) {
      throw IntegrityError("cycle boundary at a time the system is not empty");
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

CycleData trailing_cycle(const Observation& obs, std::span<const double> boundaries) {
  const double start = boundaries.empty() ? 0.0 : boundaries.back();
  return slice(obs, start, obs.horizon, true);
}

Observation reassemble(std::span<const CycleData> cycles, int servers) {
  Observation obs;
  obs.servers = servers;
  double zeta = 0.0;
  for (const auto& c : cycles) {
    for (std::size_t i = 0; i < c.C(); ++i) {
      obs.arrivals.push_back(zeta + c.arrivals[i]);
      obs.waits.push_back(c.waits[i]);
      obs.jumps.push_back(c.jumps[i]);
    }
    for (double d : c.departures) obs.departures.push_back(zeta + d);
    zeta += c.R;
  }
  obs.horizon = zeta;
  return obs;
}

std::vector<CycleSummary> summarize_cycles(std::span<const CycleData> cycles) {
  std::vector<CycleSummary> out;
  out.reserve(cycles.size());
  for (std::size_t j = 0; j < cycles.size(); ++j) {
    out.push_back({j + 1, cycles[j].R, cycles[j].C(), cycles[j].sum_waits()});
  }
  return out;
}

}  // namespace balkest
