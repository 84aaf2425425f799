#pragma once

// Exact posterior for a single binomial group under a logit-normal prior,
// by one-dimensional adaptive quadrature on the logit scale.

#include <memory>
#include <vector>

#include "fabci/interval.hpp"
#include "fabci/stats_kernel.hpp"

namespace fabci::posterior {

struct PosteriorSummary {
  double mean_theta = 0.0;
  double sd_theta = 0.0;
  double mean_logit = 0.0;
  double sd_logit = 0.0;
  double mode_logit = 0.0;
  double median_theta = 0.0;
  ProportionInterval credible;  // equal-tailed alpha/2 .. 1 - alpha/2
};

/// Posterior of eta = logit(theta) given y ~ Binomial(n, inv_logit(eta)) and
/// eta ~ prior, restricted to [mu - 10 tau, mu + 10 tau].
class LogitPosterior {
 public:
  LogitPosterior(const GroupData& data, const LogitNormalPrior& prior);

  /// Unnormalized log density, shifted so its maximum is 0.
  double log_density(double eta) const;
  double mode() const noexcept { return mode_; }
  double lower_limit() const noexcept { return lo_; }
  double upper_limit() const noexcept { return hi_; }

  /// P(eta <= x).
  double cdf(double eta) const;
  /// Inverse of cdf() on the logit scale.
  double quantile_logit(double p) const;
  double quantile_theta(double p) const { return inv_logit(quantile_logit(p)); }

  double mean_logit() const noexcept { return mean_logit_; }
  double sd_logit() const noexcept { return sd_logit_; }
  double mean_theta() const noexcept { return mean_theta_; }
  double sd_theta() const noexcept { return sd_theta_; }

 private:
  struct Slab {
    double a;
    double b;
    double mass;  // unnormalized
  };

  double partial_mass(double a, double x) const;

  GroupData data_;
  LogitNormalPrior prior_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double mode_ = 0.0;
  double log_peak_ = 0.0;
  double normalizer_ = 0.0;
  std::vector<Slab> slabs_;
  std::vector<double> cumulative_;  // unnormalized mass left of slab k
  double mean_logit_ = 0.0;
  double sd_logit_ = 0.0;
  double mean_theta_ = 0.0;
  double sd_theta_ = 0.0;
};

PosteriorSummary posterior_summary(const GroupData& data, const LogitNormalPrior& prior,
                                   double alpha);

/// Credible intervals C_B(y) for y = 0..n at one (n, prior, alpha).
class CredibleTable {
 public:
  CredibleTable(long long n, const LogitNormalPrior& prior, double alpha);

  long long n() const noexcept { return n_; }
  const ProportionInterval& at(long long y) const { return intervals_.at(static_cast<std::size_t>(y)); }
  const std::vector<ProportionInterval>& intervals() const noexcept { return intervals_; }

 private:
  long long n_;
  std::vector<ProportionInterval> intervals_;
};

/// Cached CredibleTable; thread safe.
std::shared_ptr<const CredibleTable> credible_table(long long n, const LogitNormalPrior& prior,
                                                    double alpha);

/// sum_y Binomial(y | theta, n) 1(theta in C_B(y)).
double credible_coverage(double theta, long long n, const LogitNormalPrior& prior, double alpha);

}  // namespace fabci::posterior
