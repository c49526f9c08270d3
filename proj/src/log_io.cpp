#include "balkest/log_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "balkest/errors.hpp"
#include "json.hpp"

namespace balkest {

using nlohmann::json;

namespace {
constexpr double kNever = std::numeric_limits<double>::infinity();
}  // namespace

void write_log(const SimulationLog& log, std::ostream& out) {
  out << json{{"type", "header"},
              {"servers", log.servers},
              {"policy", to_string(log.policy)},
              {"horizon", log.horizon},
              {"total_arrivals", log.total_arrivals}}
             .dump()
      << '\n';
  // Three sorted streams merged by time; departures first on ties, then
  // joins and balks in arrival order.
  std::size_t j = 0, d = 0, b = 0;
  const auto& joins = log.joins;
  const auto& deps = log.departures;
  const auto& balks = log.balks;
  while (j < joins.size() || d < deps.size() || b < balks.size()) {
    const double tj = j < joins.size() ? joins[j].time : kNever;
    const double td = d < deps.size() ? deps[d] : kNever;
    const double tb = b < balks.size() ? balks[b].time : kNever;
    if (td <= tj && td <= tb) {
      out << json{{"type", "departure"}, {"t", td}}.dump() << '\n';
      ++d;
    } else if (tj <= tb) {
      const auto& r = joins[j++];
      out << json{{"type", "arrival"},
                  {"t", r.time},
                  {"delta", r.announced},
                  {"W", r.wait},
                  {"X", r.jump},
                  {"B", r.service}}
                 .dump()
          << '\n';
    } else {
      const auto& r = balks[b++];
      out << json{{"type", "balk"}, {"t", r.time}, {"delta", r.announced}, {"Y", r.patience}}.dump()
          << '\n';
    }
  }
}

void write_log(const SimulationLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write log '" + path + "'");
  write_log(log, out);
}

SimulationLog read_log(std::istream& in) {
  SimulationLog log;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json r;
    try {
      r = json::parse(line);
      const auto type = r.at("type").get<std::string>();
      if (type == "header") {
        log.servers = r.at("servers").get<int>();
        log.policy = delay_kind_from_string(r.at("policy").get<std::string>());
        log.horizon = r.at("horizon").get<double>();
        log.total_arrivals = r.at("total_arrivals").get<std::size_t>();
        header = true;
      } else if (type == "arrival") {
        JoinRecord j;
        j.time = r.at("t").get<double>();
        j.announced = r.at("delta").get<double>();
        j.wait = r.at("W").get<double>();
        j.jump = r.at("X").get<double>();
        j.service = r.value("B", 0.0);
        log.joins.push_back(j);
      } else if (type == "departure") {
        log.departures.push_back(r.at("t").get<double>());
      } else if (type == "balk") {
        log.balks.push_back({r.at("t").get<double>(), r.at("delta").get<double>(), r.at("Y").get<double>()});
      } else {
        throw IntegrityError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw IntegrityError("log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw IntegrityError("log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw IntegrityError("log has no header record");
  if (!std::is_sorted(log.departures.begin(), log.departures.end())) {
    throw IntegrityError("departure records are not in time order");
  }
  log.queue_length_path = replay_queue_length(log);
  return log;
}

SimulationLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log '" + path + "'");
  return read_log(in);
}

}  // namespace balkest
