#pragma once

#include <stdexcept>
#include <string>

namespace driftmc {

/// Bad configuration, missing files, malformed input. Maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-convergence, zero evidence, violated numerical invariants. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace driftmc
