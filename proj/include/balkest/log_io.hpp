#pragma once

#include <iosfwd>
#include <string>

#include "balkest/simulator.hpp"

namespace balkest {

// Newline-delimited JSON, one record per line, in time order (departures
// before arrivals at equal times):
//   {"type":"header","servers":s,"policy":"...","horizon":T,"total_arrivals":N}
//   {"type":"arrival","t":..,"delta":..,"W":..,"X":..,"B":..}
//   {"type":"departure","t":..}
//   {"type":"balk","t":..,"delta":..,"Y":..}
void write_log(const SimulationLog& log, std::ostream& out);
void write_log(const SimulationLog& log, const std::string& path);

// Inverse of write_log. The queue-length path is rebuilt; thinning counters
// are not stored and come back as zero. Throws IntegrityError on bad input.
SimulationLog read_log(std::istream& in);
SimulationLog read_log(const std::string& path);

}  // namespace balkest
