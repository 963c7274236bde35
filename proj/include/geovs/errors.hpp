#pragma once

#include <stdexcept>
#include <string>

namespace geovs {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Vector/matrix dimensions inconsistent with the model.
struct DimensionError : Error {
  using Error::Error;
};

/// Input violates a structural requirement (non-skew block, bad rotation,
/// log at the pi-rotation branch, malformed config, ...).
struct StructureError : Error {
  using Error::Error;
};

/// Jacobian (or another operator) lost rank.
struct SingularityError : Error {
  double sigma_min;
  explicit SingularityError(const std::string& what, double sigma)
      : Error(what), sigma_min(sigma) {}
};

/// Iterative solver failed to reach its tolerance.
struct ConvergenceError : Error {
  double residual;
  explicit ConvergenceError(const std::string& what, double res)
      : Error(what), residual(res) {}
};

/// Rendered depth image contains no returns.
struct EmptyViewError : Error {
  using Error::Error;
};

/// Closed-loop trajectory left the admissible region.
struct DivergenceError : Error {
  int step;
  explicit DivergenceError(const std::string& what, int at_step)
      : Error(what), step(at_step) {}
};

}  // namespace geovs
