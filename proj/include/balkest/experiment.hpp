#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "balkest/config.hpp"
#include "balkest/estimator.hpp"
#include "balkest/simulator.hpp"

namespace balkest {

struct ReplicateOutcome {
  int servers = 1;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EstimationResult estimate;
  std::size_t total_arrivals = 0;
  std::size_t joiners = 0;
  double balk_fraction = 0.0;
  double horizon = 0.0;
  std::vector<CycleSummary> cycles;
  std::vector<double> q_values;  // per complete cycle at mu_hat, when requested
};

struct SummaryRow {
  std::string param;
  int servers = 1;
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0, sd = 0.0;
};

struct RunOptions {
  unsigned jobs = 0;  // 0: hardware concurrency
  std::optional<std::string> output_dir;
  std::optional<bool> write_logs;
  bool dump_q = false;
  bool write_files = true;
};

struct ExperimentResult {
  std::vector<std::string> names;
  std::vector<ReplicateOutcome> outcomes;  // ordered by (server count, replicate)
  std::vector<SummaryRow> summary;
  std::size_t failures = 0;
  // More than 20% of the replicate fits failed.
  bool failed() const { return failures * 5 > outcomes.size(); }
};

// Decomposes and (if enabled) fits one simulated path; throws on failure.
ReplicateOutcome analyze_log(const ExperimentConfig& config, const SimulationLog& log,
                             std::uint64_t fit_seed, bool keep_q = false);

// Simulates and fits one replicate; never throws, failures are recorded.
ReplicateOutcome run_replicate(const ExperimentConfig& config, int servers, std::size_t replicate,
                               bool keep_q = false, const std::string* log_path = nullptr);

// All (server count, replicate) pairs on a worker pool. Replicate i uses seed
// replicate_seed(config.seed, i) at every server count, so results do not
// depend on the number of workers.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::span<const double> sorted, double p);
SummaryRow summarize(const std::string& param, int servers, std::vector<double> values);
std::vector<SummaryRow> summarize(const std::vector<std::string>& names,
                                  const std::vector<ReplicateOutcome>& outcomes);

// Box plot (quartile box, median, whiskers at 1.5 IQR, outliers) of one
// parameter across server counts; `truth` draws a reference line.
std::string boxplot_svg(const std::string& param, const std::vector<int>& servers,
                        const std::vector<std::vector<double>>& values,
                        std::optional<double> truth = std::nullopt);

void write_artifacts(const ExperimentConfig& config, const ExperimentResult& result,
                     const std::string& dir, bool dump_q);

// Per-replicate result document (estimates, covariance, diagnostics).
std::string outcome_json(const ExperimentConfig& config, const std::vector<std::string>& names,
                         const ReplicateOutcome& outcome);

// Shortest round-trip decimal form used in every CSV.
std::string format_double(double value);

}  // namespace balkest
