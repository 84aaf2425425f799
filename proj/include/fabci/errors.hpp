#pragma once

#include <stdexcept>
#include <string>

namespace fabci {

// Precondition violations raise std::domain_error. The two types below carry
// failures that callers are expected to handle.

/// Adaptive quadrature (or a root search built on it) failed to reach its
/// tolerance. `achieved()` reports the error estimate it stopped at.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// No grid point of a FAB construction was covered by its determination
/// interval.
class EmptyRegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fabci
