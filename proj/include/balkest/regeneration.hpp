#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "balkest/simulator.hpp"

namespace balkest {

// Data of one regeneration cycle, with times relative to the cycle start.
struct CycleData {
  double R = 0.0;                  // cycle length, a multiple of the period
  std::vector<double> arrivals;    // 0 <= a_1 < ... < a_C < R
  std::vector<double> waits;       // waits[0] == 0
  std::vector<double> jumps;
  std::vector<double> departures;  // sorted, in (0, R]

  std::size_t C() const { return arrivals.size(); }
  double sum_waits() const;
};

// zeta_0 = 0 followed by every multiple kP <= horizon at which the system is
// empty: each joiner that arrived before kP has departed by kP. A departure
// exactly at kP counts as gone; an arrival exactly at kP opens the new cycle.
std::vector<double> find_cycle_boundaries(const Observation& obs, double period);

// Complete cycles between consecutive boundaries.
std::vector<CycleData> split_cycles(const Observation& obs, std::span<const double> boundaries);

// Data after the last boundary, up to the horizon. Its R is horizon - zeta_last
// and need not be a multiple of the period.
CycleData trailing_cycle(const Observation& obs, std::span<const double> boundaries);

// Absolute-time observation built by laying the cycles end to end from 0.
Observation reassemble(std::span<const CycleData> cycles, int servers);

struct CycleSummary {
  std::size_t j = 0;
  double R = 0.0;
  std::size_t C = 0;
  double sum_W = 0.0;
};

std::vector<CycleSummary> summarize_cycles(std::span<const CycleData> cycles);

}  // namespace balkest
