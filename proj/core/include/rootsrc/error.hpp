#pragma once

#include <stdexcept>
#include <string>

namespace rootsrc {

// Malformed input, violated precondition, or bad configuration. The CLI maps
// this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate numerics: NaN objective, all-zero posterior row, runaway cascade.
// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rootsrc
