#pragma once

// Exact frequentist evaluation of interval methods: coverage over theta,
// the set of outcomes whose interval covers a given theta, and the curves
// behind coverage plots. Coverage sums over all n + 1 outcomes; nothing is
// sampled here.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fabci/fab_engine.hpp"
#include "fabci/interval.hpp"
#include "fabci/stats_kernel.hpp"

namespace fabci::coverage {

/// One of the ten interval methods the lab can evaluate.
struct MethodSpec {
  enum class Family { Classic, Fab, FabPenalty, Credible };

  Family family = Family::Classic;
  fab::IntervalType type = fab::IntervalType::Wilson;

  /// "wald", "ac", "wilson", "fab-<type>", "fab-penalty-<type>", "credible".
  std::string name() const;
  /// Inverse of name(); throws std::invalid_argument on unknown names.
  static MethodSpec parse(const std::string& name);

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// Classic, default FAB and penalized FAB for Wilson, Wald and AC.
std::vector<MethodSpec> nine_methods();

using IntervalProvider = std::function<ProportionInterval(const GroupData&)>;

/// Provider for `method` at fixed (n, prior, alpha). FAB providers share one
/// spending table built up front.
IntervalProvider make_provider(const MethodSpec& method, long long n, const LogitNormalPrior& prior,
                               double alpha, double grid_step = 0.01, unsigned jobs = 1);

/// Intervals for every outcome y = 0..n. Outcomes whose construction raised
/// EmptyRegionError have no interval and are listed in empty_region().
class IntervalTable {
 public:
  static IntervalTable build(long long n, const IntervalProvider& provider, unsigned jobs = 1);

  long long n() const noexcept { return n_; }
  const std::optional<ProportionInterval>& at(long long y) const {
    return intervals_.at(static_cast<std::size_t>(y));
  }
  const std::vector<long long>& empty_region() const noexcept { return empty_; }

 private:
  long long n_ = 0;
  std::vector<std::optional<ProportionInterval>> intervals_;
  std::vector<long long> empty_;
};

struct CoveragePoint {
  double theta = 0.0;
  double coverage = 0.0;
  double mean_length = 0.0;    // pmf-weighted expected length
  std::size_t empty_region = 0;  // outcomes without an interval
};

CoveragePoint coverage_at(double theta, const IntervalTable& table);
CoveragePoint coverage_at(double theta, long long n, const MethodSpec& method,
                          const LogitNormalPrior& prior, double alpha);

struct CoveringRange {
  double theta = 0.0;
  std::vector<long long> covering_y;
  std::vector<double> pmf;  // Binomial(y | theta, n) for y = 0..n
};

CoveringRange covering_y_range(double theta, const IntervalTable& table);

struct CoverageCurve {
  MethodSpec method;
  std::vector<CoveragePoint> points;
};

/// `count` equally spaced points on [0, 1] (count >= 2), or {0.5} for 1.
std::vector<double> theta_grid(std::size_t count);

std::vector<CoverageCurve> coverage_curve(long long n, const LogitNormalPrior& prior,
                                          const std::vector<MethodSpec>& methods, double alpha,
                                          const std::vector<double>& thetas,
                                          double grid_step = 0.01, unsigned jobs = 1);

/// `method,theta,coverage,mean_length`
void write_coverage_csv(std::ostream& out, const std::vector<CoverageCurve>& curves);
/// `theta,y,pmf,covered`
void write_covering_csv(std::ostream& out, const CoveringRange& range);

/// Number formatting shared by every writer: 17 significant digits, enough
/// to round-trip a double.
std::string format_number(double x);

}  // namespace fabci::coverage
