#pragma once

#include <stdexcept>

namespace peps {

// Invalid user-facing configuration (bad instance parameters, unknown
// strategy, unsupported mode). Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Factorization or other numerical breakdown. Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Arm set does not span R^d.
struct RankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// z* - z = 0, or a target set with a single element.
struct DegenerateTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values handed to a learner or vector constructor.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace peps
