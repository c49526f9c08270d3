#pragma once

#include <stdexcept>
#include <string>

namespace balkest {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrong parameter-vector arity or a parameter outside its family domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Parameter vector is well-formed but violates a model validity condition
// (e.g. the arrival rate could dip below its positive floor).
class ValidityError : public Error {
 public:
  using Error::Error;
};

// Interval endpoints in the wrong order.
class OrderingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite sample or broken invariant inside the event loop.
class SimulationFault : public Error {
 public:
  using Error::Error;
};

// Observation data that is not internally consistent.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace balkest
