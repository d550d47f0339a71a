#pragma once

#include <stdexcept>
#include <string>

namespace wattbench {

/// Base class for every failure raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or contradictory configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset/trace/prompt files or schema mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on a numeric routine (empty input, bad window...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Telemetry provider or endpoint could not be reached.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

}  // namespace wattbench
