#include "balkest/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "balkest/errors.hpp"
#include "balkest/log_io.hpp"
#include "json.hpp"

namespace balkest {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

ReplicateOutcome analyze_log(const ExperimentConfig& config, const SimulationLog& log,
                             std::uint64_t fit_seed, bool keep_q) {
  ReplicateOutcome out;
  out.servers = log.servers;
  out.total_arrivals = log.total_arrivals;
  out.balk_fraction = log.balk_fraction();
  out.horizon = log.horizon;
  const auto obs = observe(log);
  out.joiners = obs.size();
  const auto zeta = find_cycle_boundaries(obs, config.rate.period());
  const auto cycles = split_cycles(obs, zeta);
  out.cycles = summarize_cycles(cycles);
  if (config.estimation.enabled) {
    EstimatorOptions opts;
    opts.starts = config.estimation.starts;
    opts.nelder_mead = config.estimation.nelder_mead;
    opts.box = config.box();
    opts.seed = fit_seed;
    const DelayPolicy policy{config.policy, config.service.mean(), log.servers};
    out.estimate = estimate(obs, config.rate, config.patience, policy, opts);
    if (keep_q) {
      for (const auto& c : cycles) {
        out.q_values.push_back(q_of_cycle_general(config.rate, config.patience, policy,
                                                  log.servers, c, out.estimate.mu_hat));
      }
    }
  }
  out.ok = true;
  return out;
}

ReplicateOutcome run_replicate(const ExperimentConfig& config, int servers, std::size_t replicate,
                               bool keep_q, const std::string* log_path) {
  const std::uint64_t seed = replicate_seed(config.seed, replicate);
  ReplicateOutcome out;
  try {
    const auto log = simulate(config.simulation(servers), seed);
    if (log_path) write_log(log, *log_path);
    out = analyze_log(config, log,
                      splitmix64(seed ^ (0x5e7fULL + static_cast<std::uint64_t>(servers))), keep_q);
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.servers = servers;
  out.replicate = replicate;
  out.seed = seed;
  return out;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

SummaryRow summarize(const std::string& param, int servers, std::vector<double> values) {
  SummaryRow row;
  row.param = param;
  row.servers = servers;
  row.count = values.size();
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.min = row.q1 = row.median = row.q3 = row.max = row.mean = row.sd = nan;
    return row;
  }
  std::sort(values.begin(), values.end());
  row.min = values.front();
  row.max = values.back();
  row.q1 = quantile(values, 0.25);
  row.median = quantile(values, 0.5);
  row.q3 = quantile(values, 0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return row;
}

std::vector<SummaryRow> summarize(const std::vector<std::string>& names,
                                  const std::vector<ReplicateOutcome>& outcomes) {
  std::vector<int> servers;
  for (const auto& o : outcomes) {
    if (std::find(servers.begin(), servers.end(), o.servers) == servers.end()) {
      servers.push_back(o.servers);
    }
  }
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k <= names.size(); ++k) {
    const bool balk = k == names.size();
    for (int s : servers) {
      std::vector<double> values;
      for (const auto& o : outcomes) {
        if (o.servers != s || !o.ok) continue;
        if (balk) {
          values.push_back(o.balk_fraction);
        } else if (k < o.estimate.mu_hat.size()) {
          values.push_back(o.estimate.mu_hat[k]);
        }
      }
      if (!balk && values.empty() && std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) {
            return o.estimate.mu_hat.empty();
          })) {
        continue;  // estimation disabled
      }
      rows.push_back(summarize(balk ? "balk_fraction" : names[k], s, std::move(values)));
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentResult result;
  result.names = config.parameter_names();
  const std::string dir = options.output_dir.value_or(config.output_dir);
  const bool logs = options.write_files && options.write_logs.value_or(config.write_logs);
  if (options.write_files) {
    for (int s : config.servers) fs::create_directories(fs::path(dir) / ("s" + std::to_string(s)));
  }

  const std::size_t tasks = config.servers.size() * config.replicates;
  result.outcomes.resize(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const int s = config.servers[t / config.replicates];
      const std::size_t i = t % config.replicates;
      std::string path;
      if (logs) {
        path = (fs::path(dir) / ("s" + std::to_string(s)) / ("log_" + std::to_string(i) + ".ndjson"))
                   .string();
      }
      result.outcomes[t] = run_replicate(config, s, i, options.dump_q, logs ? &path : nullptr);
    }
  };
  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, tasks));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& o : result.outcomes) {
    if (!o.ok) ++result.failures;
  }
  result.summary = summarize(result.names, result.outcomes);
  if (options.write_files) write_artifacts(config, result, dir, options.dump_q);
  return result;
}

namespace {

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string boxplot_svg(const std::string& param, const std::vector<int>& servers,
                        const std::vector<std::vector<double>>& values, std::optional<double> truth) {
  const double left = 70, right = 20, top = 40, bottom = 50, slot = 90, height = 320;
  const double width = left + right + slot * static_cast<double>(servers.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : values) {
    for (double x : v) {
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  if (truth) {
    lo = std::min(lo, *truth);
    hi = std::max(hi, *truth);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const auto y = [&](double v) { return top + height * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << top + height + bottom << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << param
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + height << "\" stroke=\"black\"/>\n";
  const double step = nice_step(hi - lo);
  for (double t = std::ceil(lo / step) * step; t <= hi; t += step) {
    const double yt = y(t);
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << yt << "\" x2=\"" << left << "\" y2=\"" << yt
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << yt + 4 << "\" text-anchor=\"end\">"
        << fmt_tick(std::abs(t) < 1e-12 * step ? 0.0 : t) << "</text>\n";
  }
  if (truth) {
    svg << "<line x1=\"" << left << "\" y1=\"" << y(*truth) << "\" x2=\"" << width - right
        << "\" y2=\"" << y(*truth) << "\" stroke=\"grey\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < servers.size(); ++k) {
    const double cx = left + slot * (static_cast<double>(k) + 0.5);
    svg << "<text x=\"" << cx << "\" y=\"" << top + height + 20 << "\" text-anchor=\"middle\">s="
        << servers[k] << "</text>\n";
    std::vector<double> v;
    for (double x : values[k]) {
      if (std::isfinite(x)) v.push_back(x);
    }
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    double wlo = q3, whi = q1;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) wlo = std::min(wlo, x);
      if (x <= q3 + 1.5 * iqr) whi = std::max(whi, x);
    }
    const double half = slot * 0.3;
    svg << "<line x1=\"" << cx << "\" y1=\"" << y(whi) << "\" x2=\"" << cx << "\" y2=\"" << y(q3)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << cx << "\" y1=\"" << y(q1) << "\" x2=\"" << cx << "\" y2=\"" << y(wlo)
        << "\" stroke=\"black\"/>\n";
    for (double w : {wlo, whi}) {
      svg << "<line x1=\"" << cx - half / 2 << "\" y1=\"" << y(w) << "\" x2=\"" << cx + half / 2
          << "\" y2=\"" << y(w) << "\" stroke=\"black\"/>\n";
    }
    svg << "<rect x=\"" << cx - half << "\" y=\"" << y(q3) << "\" width=\"" << 2 * half
        << "\" height=\"" << std::max(0.5, y(q1) - y(q3))
        << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << cx - half << "\" y1=\"" << y(med) << "\" x2=\"" << cx + half
        << "\" y2=\"" << y(med) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double x : v) {
      if (x < wlo || x > whi) {
        svg << "<circle cx=\"" << cx << "\" cy=\"" << y(x)
            << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << top + height + 42
      << "\" text-anchor=\"middle\">servers</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  return out;
}

}  // namespace

std::string outcome_json(const ExperimentConfig& config, const std::vector<std::string>& names,
                         const ReplicateOutcome& o) {
  json j;
  j["replicate"] = o.replicate;
  j["s"] = o.servers;
  j["seed"] = o.seed;
  j["ok"] = o.ok;
  if (!o.ok) j["error"] = o.error;
  j["total_arrivals"] = o.total_arrivals;
  j["joiners"] = o.joiners;
  j["balk_fraction"] = o.balk_fraction;
  j["horizon"] = o.horizon;
  j["cycles"] = o.cycles.size();
  j["names"] = names;
  j["truth"] = config.mu0();
  const auto& e = o.estimate;
  if (!e.mu_hat.empty()) {
    j["mu_hat"] = e.mu_hat;
    j["loglik"] = e.loglik;
    json cov = json::array();
    for (std::size_t r = 0; r < e.covariance.dim; ++r) {
      std::vector<double> row(e.covariance.matrix.begin() + static_cast<long>(r * e.covariance.dim),
                              e.covariance.matrix.begin() +
                                  static_cast<long>((r + 1) * e.covariance.dim));
      cov.push_back(row);
    }
    j["covariance"] = cov;
    j["standard_errors"] = e.covariance.standard_errors();
    j["covariance_source"] = to_string(e.covariance.source);
    j["covariance_singular"] = e.covariance.singular;
    j["optimizer"] = {{"evaluations", e.trace.evaluations},
                      {"iterations", e.trace.iterations},
                      {"restarts", e.trace.restarts},
                      {"starts", e.trace.starts},
                      {"converged_starts", e.trace.converged_starts},
                      {"best_start", e.trace.best_start},
                      {"converged", e.trace.converged},
                      {"start_logliks", e.trace.start_logliks}};
  }
  return j.dump(2);
}

void write_artifacts(const ExperimentConfig& config, const ExperimentResult& result,
                     const std::string& dir, bool dump_q) {
  const fs::path root(dir);
  fs::create_directories(root);
  const auto& names = result.names;

  auto est = open_out(root / "estimates.csv");
  est << "replicate,s,param,value\n";
  for (const auto& o : result.outcomes) {
    if (!o.ok) continue;
    for (std::size_t k = 0; k < o.estimate.mu_hat.size(); ++k) {
      est << o.replicate << ',' << o.servers << ',' << names[k] << ','
          << format_double(o.estimate.mu_hat[k]) << '\n';
    }
  }

  auto reps = open_out(root / "replicates.csv");
  reps << "replicate,s,seed,status,loglik,joiners,total_arrivals,balk_fraction,horizon,cycles,"
          "evaluations,converged,covariance_source,error\n";
  for (const auto& o : result.outcomes) {
    const auto& e = o.estimate;
    std::string err = o.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    reps << o.replicate << ',' << o.servers << ',' << o.seed << ',' << (o.ok ? "ok" : "failed") << ','
         << (e.mu_hat.empty() ? "" : format_double(e.loglik)) << ',' << o.joiners << ','
         << o.total_arrivals << ',' << format_double(o.balk_fraction) << ','
         << format_double(o.horizon) << ',' << o.cycles.size() << ',' << e.trace.evaluations << ','
         << (e.trace.converged ? 1 : 0) << ','
         << (e.mu_hat.empty() ? "" : to_string(e.covariance.source)) << ',' << err << '\n';
  }

  auto sum = open_out(root / "summary.csv");
  sum << "param,s,count,min,q1,median,q3,max,mean,sd\n";
  for (const auto& r : result.summary) {
    sum << r.param << ',' << r.servers << ',' << r.count << ',' << format_double(r.min) << ','
        << format_double(r.q1) << ',' << format_double(r.median) << ',' << format_double(r.q3) << ','
        << format_double(r.max) << ',' << format_double(r.mean) << ',' << format_double(r.sd) << '\n';
  }

  const auto mu0 = config.mu0();
  std::vector<std::string> plotted = names;
  plotted.push_back("balk_fraction");
  for (std::size_t k = 0; k < plotted.size(); ++k) {
    const bool balk = k == names.size();
    std::vector<std::vector<double>> values;
    bool any = false;
    for (int s : config.servers) {
      std::vector<double> v;
      for (const auto& o : result.outcomes) {
        if (o.servers != s || !o.ok) continue;
        if (balk) {
          v.push_back(o.balk_fraction);
        } else if (k < o.estimate.mu_hat.size()) {
          v.push_back(o.estimate.mu_hat[k]);
        }
      }
      any = any || !v.empty();
      values.push_back(std::move(v));
    }
    if (!any) continue;
    auto svg = open_out(root / ("boxplot_" + plotted[k] + ".svg"));
    svg << boxplot_svg(plotted[k], config.servers, values,
                       balk ? std::nullopt : std::optional<double>(mu0[k]));
  }

  for (int s : config.servers) {
    const fs::path sub = root / ("s" + std::to_string(s));
    fs::create_directories(sub);
    auto cyc = open_out(sub / "cycles.csv");
    cyc << "replicate,j,R_j,C_j,sum_W\n";
    for (const auto& o : result.outcomes) {
      if (o.servers != s) continue;
      auto res = open_out(sub / ("result_" + std::to_string(o.replicate) + ".json"));
      res << outcome_json(config, names, o) << '\n';
      for (const auto& c : o.cycles) {
        cyc << o.replicate << ',' << c.j << ',' << format_double(c.R) << ',' << c.C << ','
            << format_double(c.sum_W) << '\n';
      }
    }
  }

  if (dump_q) {
    auto q = open_out(root / "q_values.csv");
    q << "replicate,s,j,q\n";
    for (const auto& o : result.outcomes) {
      for (std::size_t j = 0; j < o.q_values.size(); ++j) {
        q << o.replicate << ',' << o.servers << ',' << j + 1 << ',' << format_double(o.q_values[j])
          << '\n';
      }
    }
  }
}

}  // namespace balkest
