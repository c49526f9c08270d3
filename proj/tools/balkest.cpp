// balkest: simulate M_t/G/s+H queues with balking and fit the arrival-rate
// and patience parameters from the joining customers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "balkest/config.hpp"
#include "balkest/errors.hpp"
#include "balkest/experiment.hpp"
#include "balkest/log_io.hpp"

namespace fs = std::filesystem;
using namespace balkest;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned jobs = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_jobs) {
  cmd->add_option("--config", c.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory or file");
  if (with_jobs) cmd->add_option("--jobs", c.jobs, "worker threads (0 = all cores)");
}

ExperimentConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  return cfg;
}

void print_summary(const ExperimentResult& result) {
  std::printf("%-14s %4s %5s %12s %12s %12s %12s %12s\n", "param", "s", "n", "q1", "median", "q3",
              "mean", "sd");
  for (const auto& r : result.summary) {
    std::printf("%-14s %4d %5zu %12.6g %12.6g %12.6g %12.6g %12.6g\n", r.param.c_str(), r.servers,
                r.count, r.q1, r.median, r.q3, r.mean, r.sd);
  }
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  for (int s : cfg.servers) {
    const fs::path dir = fs::path(cfg.output_dir) / ("s" + std::to_string(s));
    fs::create_directories(dir);
    for (std::size_t i = 0; i < cfg.replicates; ++i) {
      const auto log = simulate(cfg.simulation(s), replicate_seed(cfg.seed, i));
      const auto path = dir / ("log_" + std::to_string(i) + ".ndjson");
      write_log(log, path.string());
      const auto obs = observe(log);
      const auto cycles = find_cycle_boundaries(obs, cfg.rate.period()).size() - 1;
      std::printf("s=%d replicate=%zu arrivals=%zu joined=%zu balk_fraction=%.4f horizon=%.6g cycles=%zu -> %s\n",
                  s, i, log.total_arrivals, log.joins.size(), log.balk_fraction(), log.horizon,
                  cycles, path.string().c_str());
    }
  }
  return 0;
}

int cmd_estimate(const Common& c, const std::optional<std::string>& log_path,
                 std::optional<int> servers, std::size_t replicate,
                 const std::optional<std::string>& dump_q) {
  auto cfg = load(c);
  SimulationLog log;
  std::uint64_t fit_seed = splitmix64(cfg.seed ^ 0x5e7fULL);
  std::uint64_t seed = cfg.seed;
  if (log_path) {
    log = read_log(*log_path);
  } else {
    const int s = servers.value_or(cfg.servers.front());
    seed = replicate_seed(cfg.seed, replicate);
    log = simulate(cfg.simulation(s), seed);
    fit_seed = splitmix64(seed ^ (0x5e7fULL + static_cast<std::uint64_t>(s)));
  }
  auto outcome = analyze_log(cfg, log, fit_seed, dump_q.has_value());
  outcome.replicate = replicate;
  outcome.seed = seed;
  const auto doc = outcome_json(cfg, cfg.parameter_names(), outcome);
  if (c.out) {
    std::ofstream out(*c.out);
    if (!out) throw Error("cannot write '" + *c.out + "'");
    out << doc << '\n';
  } else {
    std::cout << doc << '\n';
  }
  if (dump_q) {
    std::ofstream q(*dump_q);
    if (!q) throw Error("cannot write '" + *dump_q + "'");
    q << "j,q\n";
    for (std::size_t j = 0; j < outcome.q_values.size(); ++j) {
      q << j + 1 << ',' << format_double(outcome.q_values[j]) << '\n';
    }
  }
  return 0;
}

int cmd_experiment(const Common& c, bool write_logs, bool dump_q) {
  const auto cfg = load(c);
  RunOptions opts;
  opts.jobs = c.jobs;
  if (write_logs) opts.write_logs = true;
  opts.dump_q = dump_q;
  const auto result = run_experiment(cfg, opts);
  print_summary(result);
  std::printf("%zu of %zu replicate fits failed; artifacts in %s\n", result.failures,
              result.outcomes.size(), cfg.output_dir.c_str());
  for (const auto& o : result.outcomes) {
    if (!o.ok) std::fprintf(stderr, "s=%d replicate=%zu: %s\n", o.servers, o.replicate, o.error.c_str());
  }
  return result.failed() ? 3 : 0;
}

int cmd_validate(const Common& c) {
  const auto cfg = load(c);
  const auto report = validate_config(cfg);
  for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());
  if (report.ok()) std::printf("%s: ok\n", c.config.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and maximum-likelihood estimation for M_t/G/s+H queues with balking"};
  app.require_subcommand(1);

  Common sim_opts, est_opts, exp_opts, val_opts;
  auto* sim = app.add_subcommand("simulate", "simulate every (s, replicate) and write NDJSON logs");
  add_common(sim, sim_opts, false);

  auto* est = app.add_subcommand("estimate", "fit one path (simulated, or read with --log)");
  add_common(est, est_opts, false);
  std::optional<std::string> log_path, dump_q_path;
  std::optional<int> servers;
  std::size_t replicate = 0;
  est->add_option("--log", log_path, "NDJSON log to fit instead of simulating")->check(CLI::ExistingFile);
  est->add_option("--servers", servers, "server count when simulating (default: first in config)");
  est->add_option("--replicate", replicate, "replicate index when simulating");
  est->add_option("--dump-q", dump_q_path, "write per-cycle q(Z_j, mu_hat) to this CSV");

  auto* exp = app.add_subcommand("experiment", "replicate, fit, summarize and plot");
  add_common(exp, exp_opts, true);
  bool write_logs = false, dump_q = false;
  exp->add_flag("--write-logs", write_logs, "also write s<s>/log_<i>.ndjson");
  exp->add_flag("--dump-q", dump_q, "write q_values.csv with per-cycle contributions");

  auto* val = app.add_subcommand("validate", "check a configuration and print warnings");
  add_common(val, val_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(sim_opts);
    if (*est) return cmd_estimate(est_opts, log_path, servers, replicate, dump_q_path);
    if (*exp) return cmd_experiment(exp_opts, write_logs, dump_q);
    if (*val) return cmd_validate(val_opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
