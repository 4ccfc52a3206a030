#pragma once

#include <stdexcept>
#include <string>

namespace beyondwords {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition violation on user-supplied values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (corpus records, model output, artifacts).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Shape or numeric contract violated (dimension mismatch, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A remote model endpoint failed after all retries.
class ServiceError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage could not run (missing or corrupt upstream artifact).
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace beyondwords
