#pragma once

#include <stdexcept>
#include <string>

namespace warmuplab {

// Structural problems: mismatched shapes, malformed configs.
struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// LMO requested for a gradient the geometry cannot normalize (g = 0).
struct DegenerateGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Zero displacement or otherwise unusable diagnostic input.
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// lambda * eta outside [0, 1] in the weight-decay update.
struct InvalidStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schedule denominator non-positive or degenerate constants.
struct InvalidCoefficients : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive scheduler could not be initialized (bad delta0, no valid candidate).
struct SchedulerInitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-deficient or ill-conditioned least-squares design.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative kernel failed to converge within its cap.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace warmuplab
