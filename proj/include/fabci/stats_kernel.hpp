#pragma once

// Numerical primitives shared by every interval method: the standard normal
// CDF and quantile, binomial pmf, logit-normal marginal moments (computed by
// adaptive quadrature and cached per (n, prior)), and seeded Monte Carlo
// cross-checks.

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace fabci {

/// Normal prior on the logit of a proportion: logit(theta) ~ N(mu, tau2).
class LogitNormalPrior {
 public:
  LogitNormalPrior(double mu, double tau2);

  double mu() const noexcept { return mu_; }
  double tau2() const noexcept { return tau2_; }
  double tau() const noexcept { return tau_; }

  friend bool operator==(const LogitNormalPrior&, const LogitNormalPrior&) = default;

 private:
  double mu_;
  double tau2_;
  double tau_;
};

/// y successes out of n trials.
struct GroupData {
  GroupData(long long y, long long n);

  long long y;
  long long n;

  double proportion() const noexcept { return static_cast<double>(y) / static_cast<double>(n); }
};

/// A quantile on the extended real line; +-infinity only at p = 0 or 1.
struct ExtendedQuantile {
  double value;

  bool is_finite() const noexcept { return value > -kInf && value < kInf; }
  operator double() const noexcept { return value; }

  static constexpr double kInf = std::numeric_limits<double>::infinity();
};

double inv_logit(double eta) noexcept;
double logit(double p) noexcept;

double std_normal_cdf(double x) noexcept;
double std_normal_pdf(double x) noexcept;

/// Inverse of the standard normal CDF. Throws std::domain_error outside [0, 1].
ExtendedQuantile std_normal_quantile(double p);

/// Binomial(y | theta, n), evaluated in log space.
double binom_pmf(long long y, long long n, double theta);

/// log C(n, y) for y = 0..n.
std::vector<double> log_binom_coefficients(long long n);

/// Marginal distribution of y under y | theta ~ Binomial(n, theta),
/// logit(theta) ~ prior, integrated over eta in [mu - 10 tau, mu + 10 tau].
/// Immutable once built; shared across threads through marginal_model().
class MarginalModel {
 public:
  MarginalModel(long long n, const LogitNormalPrior& prior);

  long long n() const noexcept { return n_; }
  const LogitNormalPrior& prior() const noexcept { return prior_; }

  std::span<const double> pmf() const noexcept { return pmf_; }
  double pmf(long long y) const;

  /// P(lo <= y <= hi); empty ranges give 0.
  double mass(long long lo, long long hi) const noexcept;

  double mean_y() const noexcept { return mean_y_; }
  double variance_y() const noexcept { return variance_y_; }
  /// Error estimate reported by the quadrature, relative to the pmf's L1 norm.
  double quadrature_error() const noexcept { return quad_error_; }

 private:
  long long n_;
  LogitNormalPrior prior_;
  std::vector<double> pmf_;
  std::vector<double> cumulative_;  // cumulative_[k] = sum_{y < k} pmf(y)
  double mean_y_ = 0.0;
  double variance_y_ = 0.0;
  double quad_error_ = 0.0;
};

/// Cached MarginalModel for (n, prior). Thread safe.
std::shared_ptr<const MarginalModel> marginal_model(long long n, const LogitNormalPrior& prior);
void clear_marginal_cache();

double marginal_pmf(long long y, long long n, const LogitNormalPrior& prior);
double marginal_variance_y(long long n, const LogitNormalPrior& prior);

/// var(inv_logit(eta)) for eta ~ prior, two-pass quadrature.
double variance_theta(const LogitNormalPrior& prior);
double mean_theta(const LogitNormalPrior& prior);

// ---------------------------------------------------------------------------
// Seeded Monte Carlo

/// Derives an independent 64-bit seed for sub-stream `stream` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

struct MonteCarloEstimate {
  double value;
  double standard_error;
};

/// Sample variance of inv_logit(eta), eta ~ prior, with its standard error.
MonteCarloEstimate mc_variance_theta(const LogitNormalPrior& prior, std::size_t draws,
                                     std::uint64_t seed);
/// Sample variance of y' drawn from the marginal (eta, then binomial).
MonteCarloEstimate mc_variance_y(long long n, const LogitNormalPrior& prior, std::size_t draws,
                                 std::uint64_t seed);

}  // namespace fabci
