#pragma once

#include <stdexcept>
#include <string>

namespace rshe {

// A replica produced a non-finite value. Carries the first offending grid
// cell; the harness logs and excludes the replica, it never continues with
// NaNs silently.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(int replica, int time_index, int space_index)
      : std::runtime_error("solution blow-up at replica " +
                           std::to_string(replica) + ", step " +
                           std::to_string(time_index) + ", cell " +
                           std::to_string(space_index)),
        replica(replica),
        time_index(time_index),
        space_index(space_index) {}

  int replica;
  int time_index;
  int space_index;
};

// A quadrature could not reach its accuracy target (e.g. a non-decaying test
// function was passed to the quadratic-form verifier).
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rshe
