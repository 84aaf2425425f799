#pragma once

// FAB (frequentist, assisted by Bayes) intervals for a binomial proportion.
//
// For every candidate theta a spending value s(theta) splits alpha between
// the two tails of an acceptance band
//   I(theta, s, sigma) = [max(0, theta + sigma z_{(1-s)alpha}),
//                         min(1, theta + sigma z_{1-s alpha})].
// s(theta) minimizes the prior-marginal probability that the observed
// statistic lands in the band (optionally replaced by an "all-in" penalty
// when the untruncated band leaves [0, 1]); among the s between the smallest
// and largest minimizer the shortest band wins. The FAB interval is then the longest run of theta whose band, scaled
// by the data-based standard error, contains the estimate.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fabci/interval.hpp"
#include "fabci/stats_kernel.hpp"

namespace fabci::fab {

enum class IntervalType { Wald, AgrestiCoull, Wilson };
enum class RiskMode { Default, AllInPenalty };

std::string to_string(IntervalType t);
std::string to_string(RiskMode m);
IntervalMethod fab_method(IntervalType t) noexcept;

/// Step of the s grid scanned for every theta.
inline constexpr double kSpendStep = 0.01;
/// Risks within this distance of the grid minimum count as ties.
inline constexpr double kRiskTieTolerance = 1e-12;
/// Interior points of [s_min, s_max] tried when shortening the band.
inline constexpr int kTieInteriorPoints = 21;

struct FabConfig {
  IntervalType type = IntervalType::Wilson;
  RiskMode mode = RiskMode::Default;
  double alpha = 0.05;
  long long n = 1;
  LogitNormalPrior prior{0.0, 1.0};
  double grid_step = 0.01;
  int bisection_iters = 30;

  /// Throws std::domain_error when a field is out of range or 1/grid_step is
  /// not an integer.
  void validate() const;
  std::size_t grid_intervals() const;  // 1 / grid_step
  double grid_theta(std::size_t k) const;
  /// Canonical text identifying everything a spending table depends on.
  std::string cache_key() const;
};

struct RiskInterval {
  double lower = 0.0;
  double upper = 0.0;

  double length() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Untruncated band theta + sigma z_{(1-s)alpha} .. theta + sigma z_{1-s alpha}.
/// Infinite quantiles give infinite ends; sigma = 0 gives [theta, theta].
RiskInterval untruncated_band(double theta, double s, double sigma, double alpha);

RiskInterval risk_interval(double theta, double s, double sigma, double alpha);

/// 1 + max(-lower, upper - 1) of the untruncated band when it leaves [0, 1];
/// nullopt when the band stays inside and the plain risk applies.
std::optional<double> all_in_penalty(double theta, double s, double sigma, double alpha);

struct SpendingChoice {
  double s = 0.5;
  double risk = 0.0;
  double s_min = 0.5;  // refined edges of the minimal-risk region
  double s_max = 0.5;
};

/// Risk evaluation for one configuration: the marginal of the statistic and
/// the risk-band scale sigma_risk.
class RiskModel {
 public:
  explicit RiskModel(const FabConfig& config);

  const FabConfig& config() const noexcept { return config_; }
  double sigma() const noexcept { return sigma_; }
  const MarginalModel& marginal() const noexcept { return *marginal_; }

  /// Statistic compared with the band: y / n, or (y + 2) / (n + 4) for AC.
  double statistic(long long y) const noexcept;

  double risk(double theta, double s) const;
  double band_length(double theta, double s) const;
  SpendingChoice learn(double theta) const;

 private:
  FabConfig config_;
  std::shared_ptr<const MarginalModel> marginal_;
  double sigma_ = 0.0;
};

double pointwise_risk(double theta, double s, const FabConfig& config);
double learn_spending_at(double theta, const FabConfig& config);

struct SpendingEntry {
  double theta;
  double s;
};

struct SpendingTable {
  FabConfig config;
  std::vector<SpendingEntry> grid;
};

SpendingTable build_spending_table(const FabConfig& config, unsigned jobs = 1);

/// Process-wide cache keyed by FabConfig::cache_key(); thread safe.
std::shared_ptr<const SpendingTable> cached_spending_table(const FabConfig& config,
                                                           unsigned jobs = 1);
void store_spending_table(std::shared_ptr<const SpendingTable> table);
void clear_spending_cache();

/// Second-level storage consulted on an in-memory cache miss (for example a
/// directory of serialized tables). Implementations must be thread safe.
class SpendingStore {
 public:
  virtual ~SpendingStore() = default;
  virtual std::shared_ptr<const SpendingTable> load(const FabConfig& config) = 0;
  virtual void save(const SpendingTable& table) = 0;
};

/// Installs `store` process-wide; nullptr removes it.
void set_spending_store(std::shared_ptr<SpendingStore> store);

/// Builds FAB intervals for any observation under one configuration, reusing
/// one spending table.
class FabIntervalBuilder {
 public:
  FabIntervalBuilder(const FabConfig& config, std::shared_ptr<const SpendingTable> table);
  explicit FabIntervalBuilder(const FabConfig& config, unsigned jobs = 1);

  const FabConfig& config() const noexcept { return risk_.config(); }
  const SpendingTable& table() const noexcept { return *table_; }
  const RiskModel& risk_model() const noexcept { return risk_; }

  /// theta_hat itself, or (n theta_hat + 2) / (n + 4) for AC.
  double center_for(double theta_hat) const noexcept;
  /// Data-based scale of the determination band.
  double determination_scale(double theta, double center) const noexcept;
  RiskInterval determination_interval(double theta, double theta_hat) const;

  /// Throws EmptyRegionError when no grid point is covered.
  ProportionInterval interval(const GroupData& data) const;
  ProportionInterval interval_at(double theta_hat) const;

 private:
  bool covered(double theta, double s, double center) const;

  RiskModel risk_;
  std::shared_ptr<const SpendingTable> table_;
};

ProportionInterval fab_interval(const GroupData& data, const FabConfig& config);
RiskInterval determination_interval(double theta, const GroupData& data, const FabConfig& config);

}  // namespace fabci::fab
