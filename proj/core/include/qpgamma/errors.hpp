#pragma once

#include <stdexcept>
#include <string>

namespace qpgamma {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Missing, malformed or inconsistent data (CLI exit code 3).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Solver or fit failure (CLI exit code 4).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace qpgamma
