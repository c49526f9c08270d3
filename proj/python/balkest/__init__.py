"""Simulation and maximum likelihood estimation for multi-server queues with
balking customers and periodic Poisson arrivals."""

from ._core import (
    BalkestError,
    Config,
    ConfigError,
    Estimate,
    EstimationError,
    IntegrityError,
    Likelihood,
    Observation,
    ParameterError,
    SimulationLog,
    cycle_boundaries,
    estimate,
    load_config,
    observe,
    parse_config,
    read_log,
    run_experiment,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BalkestError",
    "Config",
    "ConfigError",
    "Estimate",
    "EstimationError",
    "IntegrityError",
    "Likelihood",
    "Observation",
    "ParameterError",
    "SimulationLog",
    "cycle_boundaries",
    "estimate",
    "load_config",
    "observe",
    "parse_config",
    "read_log",
    "run_experiment",
    "simulate",
]
