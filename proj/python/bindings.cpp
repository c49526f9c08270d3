#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "balkest/config.hpp"
#include "balkest/errors.hpp"
#include "balkest/estimator.hpp"
#include "balkest/experiment.hpp"
#include "balkest/likelihood.hpp"
#include "balkest/log_io.hpp"
#include "balkest/regeneration.hpp"
#include "balkest/simulator.hpp"

namespace py = pybind11;
using namespace balkest;

namespace {

template <typename T, typename F>
std::vector<double> column(const std::vector<T>& rows, F get) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(get(r));
  return out;
}

py::dict summary_row(const SummaryRow& r) {
  py::dict d;
  d["param"] = r.param;
  d["s"] = r.servers;
  d["count"] = r.count;
  d["min"] = r.min;
  d["q1"] = r.q1;
  d["median"] = r.median;
  d["q3"] = r.q3;
  d["max"] = r.max;
  d["mean"] = r.mean;
  d["sd"] = r.sd;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulation and maximum likelihood for queues with balking";

  auto base = py::register_exception<Error>(m, "BalkestError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base.ptr());

  py::class_<ExperimentConfig>(m, "Config")
      .def_readonly("name", &ExperimentConfig::name)
      .def_readonly("servers", &ExperimentConfig::servers)
      .def_readonly("replicates", &ExperimentConfig::replicates)
      .def_readonly("seed", &ExperimentConfig::seed)
      .def_property_readonly("period", [](const ExperimentConfig& c) { return c.rate.period(); })
      .def_property_readonly("policy", [](const ExperimentConfig& c) { return to_string(c.policy); })
      .def_property_readonly("parameter_names", &ExperimentConfig::parameter_names)
      .def_property_readonly("mu0", &ExperimentConfig::mu0)
      .def("warnings", [](const ExperimentConfig& c) { return validate_config(c).warnings; })
      .def("__repr__", [](const ExperimentConfig& c) { return "<balkest.Config '" + c.name + "'>"; });

  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"));

  py::class_<SimulationLog>(m, "SimulationLog")
      .def_readonly("servers", &SimulationLog::servers)
      .def_readonly("horizon", &SimulationLog::horizon)
      .def_readonly("total_arrivals", &SimulationLog::total_arrivals)
      .def_readonly("departures", &SimulationLog::departures)
      .def_property_readonly("balk_fraction", &SimulationLog::balk_fraction)
      .def_property_readonly("join_times",
                             [](const SimulationLog& l) { return column(l.joins, [](const JoinRecord& j) { return j.time; }); })
      .def_property_readonly("waits",
                             [](const SimulationLog& l) { return column(l.joins, [](const JoinRecord& j) { return j.wait; }); })
      .def_property_readonly("announced",
                             [](const SimulationLog& l) { return column(l.joins, [](const JoinRecord& j) { return j.announced; }); })
      .def_property_readonly("services",
                             [](const SimulationLog& l) { return column(l.joins, [](const JoinRecord& j) { return j.service; }); })
      .def_property_readonly("balk_times",
                             [](const SimulationLog& l) { return column(l.balks, [](const BalkRecord& b) { return b.time; }); })
      .def("write", [](const SimulationLog& l, const std::string& path) { write_log(l, path); }, py::arg("path"));

  m.def("read_log", [](const std::string& path) { return read_log(path); }, py::arg("path"));

  py::class_<Observation>(m, "Observation")
      .def_readonly("servers", &Observation::servers)
      .def_readonly("arrivals", &Observation::arrivals)
      .def_readonly("waits", &Observation::waits)
      .def_readonly("jumps", &Observation::jumps)
      .def_readonly("departures", &Observation::departures)
      .def_readonly("horizon", &Observation::horizon)
      .def("__len__", &Observation::size)
      .def("truncate", [](const Observation& o, double t) { return truncate(o, t); }, py::arg("t_end"));

  m.def(
      "simulate",
      [](const ExperimentConfig& c, int servers, std::uint64_t seed) {
        py::gil_scoped_release release;
        return simulate(c.simulation(servers), seed);
      },
      py::arg("config"), py::arg("servers"), py::arg("seed"));
  m.def("observe", &observe, py::arg("log"));
  m.def(
      "cycle_boundaries",
      [](const ExperimentConfig& c, const Observation& o) { return find_cycle_boundaries(o, c.rate.period()); },
      py::arg("config"), py::arg("observation"));

  py::class_<LikelihoodContext>(m, "Likelihood")
      .def(py::init([](const ExperimentConfig& c, const Observation& o) {
             return LikelihoodContext(c.rate, c.patience, {c.policy, c.service.mean(), o.servers}, o);
           }),
           py::arg("config"), py::arg("observation"))
      .def_property_readonly("parameter_names", &LikelihoodContext::parameter_names)
      .def_property_readonly("joiners", &LikelihoodContext::joiners)
      .def("__call__", [](const LikelihoodContext& ctx, const std::vector<double>& mu) { return ctx.loglik(mu); },
           py::arg("mu"));

  py::class_<EstimationResult>(m, "Estimate")
      .def_readonly("names", &EstimationResult::names)
      .def_readonly("mu_hat", &EstimationResult::mu_hat)
      .def_readonly("loglik", &EstimationResult::loglik)
      .def_readonly("cycles", &EstimationResult::cycles)
      .def_property_readonly("converged", [](const EstimationResult& r) { return r.trace.converged; })
      .def_property_readonly("evaluations", [](const EstimationResult& r) { return r.trace.evaluations; })
      .def_property_readonly("covariance_source",
                             [](const EstimationResult& r) { return to_string(r.covariance.source); })
      .def_property_readonly("covariance",
                             [](const EstimationResult& r) {
                               const auto& c = r.covariance;
                               std::vector<std::vector<double>> rows(c.dim, std::vector<double>(c.dim));
                               for (std::size_t i = 0; i < c.dim; ++i)
                                 for (std::size_t j = 0; j < c.dim; ++j) rows[i][j] = c.at(i, j);
                               return rows;
                             })
      .def_property_readonly("standard_errors",
                             [](const EstimationResult& r) { return r.covariance.standard_errors(); });

  m.def(
      "estimate",
      [](const ExperimentConfig& c, const Observation& o, std::uint64_t seed, std::size_t starts) {
        EstimatorOptions opts;
        opts.seed = seed;
        opts.starts = starts == 0 ? c.estimation.starts : starts;
        opts.nelder_mead = c.estimation.nelder_mead;
        opts.box = c.box();
        py::gil_scoped_release release;
        return estimate(o, c.rate, c.patience, {c.policy, c.service.mean(), o.servers}, opts);
      },
      py::arg("config"), py::arg("observation"), py::arg("seed") = 0, py::arg("starts") = 0);

  m.def(
      "run_experiment",
      [](const ExperimentConfig& c, unsigned jobs, std::optional<std::string> output_dir) {
        RunOptions opts;
        opts.jobs = jobs;
        opts.write_files = output_dir.has_value();
        opts.output_dir = std::move(output_dir);
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(c, opts);
        }
        py::list rows;
        for (const auto& r : result.summary) rows.append(summary_row(r));
        py::dict out;
        out["names"] = result.names;
        out["summary"] = rows;
        out["failures"] = result.failures;
        return out;
      },
      py::arg("config"), py::arg("jobs") = 1, py::arg("output_dir") = py::none());
}
