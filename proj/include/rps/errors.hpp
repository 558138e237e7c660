#pragma once

#include <stdexcept>
#include <string>

namespace rps {

/// Bad configuration or violated precondition on model/scheme parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The simulation left the regime where it is well defined: the implicit
/// solve did not converge or a state became non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rps
