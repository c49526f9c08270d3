#include "balkest/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "balkest/errors.hpp"
#include "json.hpp"

namespace balkest {

using nlohmann::json;

namespace {

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key);
}

void parse_rate(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ConfigError("'rate' must be an object");
  const double base = get<double>(j, "base");
  std::vector<double> amps, phases, freqs;
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      amps.push_back(get<double>(t, "amplitude"));
      phases.push_back(get<double>(t, "phase"));
      freqs.push_back(get<double>(t, "frequency"));
    }
  }
  const double period = get_or<double>(j, "period", 0.0);
  const double floor = get_or<double>(j, "floor", RateModel::kDefaultFloor);
  try {
    if (freqs.empty()) {
      cfg.rate = RateModel::constant(period > 0.0 ? period : 1.0, floor);
    } else {
      cfg.rate = RateModel(freqs, period, floor);
    }
  } catch (const Error& e) {
    throw ConfigError(std::string("rate: ") + e.what());
  }
  cfg.alpha = {base};
  cfg.alpha.insert(cfg.alpha.end(), amps.begin(), amps.end());
  cfg.alpha.insert(cfg.alpha.end(), phases.begin(), phases.end());
}

void parse_patience(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ConfigError("'patience' must be an object");
  PatienceFamily family;
  try {
    family = patience_family_from_string(get<std::string>(j, "family"));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  switch (family) {
    case PatienceFamily::none:
      cfg.patience = PatienceModel::none();
      cfg.theta = {};
      break;
    case PatienceFamily::exponential:
      cfg.patience = PatienceModel::exponential();
      cfg.theta = {get<double>(j, "rate")};
      break;
    case PatienceFamily::hyperexponential: {
      auto weights = get<std::vector<double>>(j, "weights");
      const auto rates = get<std::vector<double>>(j, "rates");
      if (rates.size() < 2) throw ConfigError("hyperexponential patience needs >= 2 rates");
      if (weights.size() == rates.size()) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("hyperexponential weights must sum to 1");
        weights.pop_back();
      }
      if (weights.size() + 1 != rates.size()) {
        throw ConfigError("hyperexponential needs m-1 (or m) weights for m rates");
      }
      cfg.patience = PatienceModel::hyperexponential(rates.size());
      cfg.theta = weights;
      cfg.theta.insert(cfg.theta.end(), rates.begin(), rates.end());
      break;
    }
    case PatienceFamily::lomax:
      cfg.patience = PatienceModel::lomax();
      cfg.theta = {get<double>(j, "scale"), get<double>(j, "shape")};
      break;
    case PatienceFamily::geometric:
      cfg.patience = PatienceModel::geometric();
      cfg.theta = {get<double>(j, "p")};
      break;
  }
  if (!cfg.patience.in_domain(cfg.theta)) {
    throw ConfigError("patience parameters outside the " + to_string(family) + " domain");
  }
}

void parse_service(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ConfigError("'service' must be an object");
  const auto family = get<std::string>(j, "family");
  const auto param = get<std::string>(j, "parametrization");
  try {
    if (family == "exponential") {
      if (param == "mean") {
        cfg.service = ServiceModel::exponential(get<double>(j, "mean"));
      } else if (param == "rate") {
        cfg.service = ServiceModel::exponential(1.0 / get<double>(j, "rate"));
      } else {
        throw ConfigError("exponential service parametrization must be 'mean' or 'rate'");
      }
    } else if (family == "gamma") {
      if (param != "shape_scale") throw ConfigError("gamma service parametrization must be 'shape_scale'");
      cfg.service = ServiceModel::gamma(get<double>(j, "shape"), get<double>(j, "scale"));
    } else {
      throw ConfigError("unknown service family '" + family + "'");
    }
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("service: ") + e.what());
  }
}

void parse_estimation(const json& j, ExperimentConfig& cfg) {
  auto& est = cfg.estimation;
  est.enabled = get_or<bool>(j, "fit", true);
  est.starts = get_or<std::size_t>(j, "starts", est.starts);
  est.nelder_mead.diameter_tol = get_or<double>(j, "tolerance", est.nelder_mead.diameter_tol);
  est.nelder_mead.max_evaluations =
      get_or<std::size_t>(j, "max_evaluations", est.nelder_mead.max_evaluations);
  if (est.starts == 0) throw ConfigError("estimation.starts must be positive");
  if (j.contains("box")) {
    Box box{get<std::vector<double>>(j.at("box"), "lo"), get<std::vector<double>>(j.at("box"), "hi")};
    try {
      box.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("estimation.box: ") + e.what());
    }
    est.box = box;
  }
}

}  // namespace

SimulationConfig ExperimentConfig::simulation(int s) const {
  SimulationConfig sim;
  sim.rate = rate;
  sim.alpha = alpha;
  sim.patience = patience;
  sim.theta = theta;
  sim.service = service;
  sim.servers = s;
  sim.policy = policy;
  sim.total_arrivals = total_arrivals;
  sim.horizon = horizon;
  return sim;
}

std::vector<double> ExperimentConfig::mu0() const {
  auto mu = alpha;
  mu.insert(mu.end(), theta.begin(), theta.end());
  return mu;
}

std::vector<std::string> ExperimentConfig::parameter_names() const {
  auto names = rate.parameter_names();
  for (auto& n : patience.parameter_names()) names.push_back(n);
  return names;
}

Box ExperimentConfig::box() const { return estimation.box ? *estimation.box : default_box(rate, patience); }

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(j, "name", cfg.name);
  parse_rate(get<json>(j, "rate"), cfg);
  parse_patience(get<json>(j, "patience"), cfg);
  parse_service(get<json>(j, "service"), cfg);
  const auto servers = get<json>(j, "servers");
  cfg.servers = servers.is_array() ? servers.get<std::vector<int>>() : std::vector<int>{servers.get<int>()};
  if (cfg.servers.empty()) throw ConfigError("'servers' must not be empty");
  for (int s : cfg.servers) {
    if (s < 1) throw ConfigError("server counts must be >= 1");
  }
  cfg.policy = delay_kind_from_string(get_or<std::string>(j, "policy", "exact_vwt"));
  if (j.contains("total_arrivals") && !j.at("total_arrivals").is_null()) {
    cfg.total_arrivals = get<std::size_t>(j, "total_arrivals");
    if (*cfg.total_arrivals == 0) throw ConfigError("total_arrivals must be positive");
  }
  if (j.contains("horizon") && !j.at("horizon").is_null()) {
    cfg.horizon = get<double>(j, "horizon");
    if (!(*cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");
  }
  if (!cfg.total_arrivals && !cfg.horizon) throw ConfigError("need 'total_arrivals' or 'horizon'");
  const long long reps = get_or<long long>(j, "replicates", 1);
  if (reps < 1) throw ConfigError("replicates must be >= 1");
  cfg.replicates = static_cast<std::size_t>(reps);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  cfg.write_logs = get_or<bool>(j, "write_logs", false);
  if (j.contains("estimation")) parse_estimation(j.at("estimation"), cfg);
  if (cfg.box().size() != cfg.mu0().size()) {
    throw ConfigError("estimation box dimension does not match the model");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

ValidationReport validate_config(const ExperimentConfig& config) {
  ValidationReport report;
  const double low = config.rate.lower_bound(config.alpha);
  if (low < config.rate.floor()) {
    std::ostringstream msg;
    msg << "rate positivity: base - sum|amplitude| = " << low << " is below the floor "
        << config.rate.floor();
    report.warnings.push_back(msg.str());
  }
  double top = config.alpha[config.rate.base_index()];
  for (const auto& t : config.rate.terms()) top += std::abs(config.alpha[t.amplitude_index]);
  const double never_balk = config.patience.survival_at_infinity(config.theta);
  for (int s : config.servers) {
    const double load = top * config.service.mean() * never_balk;
    if (load >= s) {
      std::ostringstream msg;
      msg << "stability: lambda_max * E[B] * P(Y = inf) = " << load << " >= s = " << s;
      report.warnings.push_back(msg.str());
    }
  }
  const Box box = config.box();
  const auto mu = config.mu0();
  if (!box.contains(mu)) {
    const auto names = config.parameter_names();
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if (mu[k] < box.lo[k] || mu[k] > box.hi[k]) {
        report.warnings.push_back("box: true " + names[k] + " lies outside the estimation box");
      }
    }
  }
  return report;
}

}  // namespace balkest
