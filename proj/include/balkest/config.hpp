#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "balkest/estimator.hpp"
#include "balkest/simulator.hpp"

namespace balkest {

struct EstimationSettings {
  bool enabled = true;
  std::size_t starts = 8;
  NelderMeadOptions nelder_mead{};
  std::optional<Box> box;
};

// One experiment: a true model, the server counts to sweep, and how many
// seeded replicates to simulate and fit at each.
struct ExperimentConfig {
  std::string name = "experiment";
  RateModel rate = RateModel::constant();
  std::vector<double> alpha{1.0};
  PatienceModel patience = PatienceModel::none();
  std::vector<double> theta;
  ServiceModel service = ServiceModel::exponential(1.0);
  std::vector<int> servers{1};
  DelayKind policy = DelayKind::exact_vwt;
  std::optional<std::size_t> total_arrivals;
  std::optional<double> horizon;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool write_logs = false;
  EstimationSettings estimation{};

  SimulationConfig simulation(int s) const;
  std::vector<double> mu0() const;
  std::vector<std::string> parameter_names() const;
  Box box() const;
};

// Parses the JSON experiment schema (see configs/ and the README). Throws
// ConfigError on malformed input or arity mismatches.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ValidationReport {
  std::vector<std::string> warnings;
  bool ok() const { return warnings.empty(); }
};

// Sanity checks that do not make the configuration unusable: rate positivity,
// stability of the unbounded-patience part, truth inside the estimation box.
ValidationReport validate_config(const ExperimentConfig& config);

}  // namespace balkest
