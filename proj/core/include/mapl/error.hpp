#pragma once

#include <stdexcept>
#include <string>

namespace mapl {

/// Invalid configuration, arguments, or preconditions supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent choice data (CSV parse failures, ragged panels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, gradients, or parameters.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mapl
