#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fabci {

enum class IntervalMethod {
  Wald,
  AgrestiCoull,
  Wilson,
  Credible,
  FabWald,
  FabAgrestiCoull,
  FabWilson,
};

std::string_view to_string(IntervalMethod m) noexcept;

/// Closed interval [lower, upper] within [0, 1] plus how it was built.
struct ProportionInterval {
  double lower = 0.0;
  double upper = 0.0;
  IntervalMethod method = IntervalMethod::Wald;
  double alpha = 0.05;
  double center = 0.0;  // estimate the interval was built around
  // Endpoints before clipping to [0, 1]; equal to lower/upper when no
  // clipping happened.
  double raw_lower = 0.0;
  double raw_upper = 0.0;
  // Count fed to the FAB engine when the center is not y / n.
  std::optional<long long> rounded_count;

  double length() const noexcept { return upper - lower; }
  bool contains(double theta) const noexcept { return lower <= theta && theta <= upper; }
};

/// Builds an interval from raw endpoints, clipping them to [0, 1]. Throws
/// std::domain_error if alpha is outside (0, 1) or raw_lower > raw_upper.
ProportionInterval make_interval(double raw_lower, double raw_upper, IntervalMethod method,
                                 double alpha, double center);

}  // namespace fabci
