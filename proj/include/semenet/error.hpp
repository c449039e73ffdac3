#pragma once

#include <stdexcept>
#include <string>

namespace semenet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, layer, or run configuration is inconsistent.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Input data violates an operation's precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// An API was called in a state where the call makes no sense.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A metric is not defined for the given data (e.g. AUC with one class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint could not be read back.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace semenet
