#pragma once

#include <stdexcept>
#include <string>

namespace qdsim {

/// Invalid parameters, configuration files or command-line arguments.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Failure to read or write a file.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A data file that parses but does not follow the expected layout.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure that cannot be reported through a result flag.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qdsim
