#include "fabci/stats_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "fabci/quadrature.hpp"

namespace fabci {

namespace {

constexpr double kTruncation = 10.0;  // integrate eta over mu +- 10 tau
constexpr double kMarginalRelTol = 1e-8;
constexpr double kMomentRelTol = 1e-10;

std::uint64_t bits_of(double x) {
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

double log_inv_logit(double eta) {
  // log(1 / (1 + exp(-eta)))
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double normal_density(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> prior_breaks(const LogitNormalPrior& prior) {
  std::vector<double> b;
  b.reserve(2 * static_cast<int>(kTruncation) + 1);
  for (int k = -static_cast<int>(kTruncation); k <= static_cast<int>(kTruncation); ++k) {
    b.push_back(prior.mu() + k * prior.tau());
  }
  return b;
}

double acklam_lower(double p) {
  // Rational approximation for p in (0, 0.5], relative error ~1e-9.
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549732539343734e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

LogitNormalPrior::LogitNormalPrior(double mu, double tau2) : mu_(mu), tau2_(tau2), tau_(std::sqrt(tau2)) {
  if (!std::isfinite(mu)) throw std::domain_error("prior mean must be finite");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) {
    throw std::domain_error("prior variance must be positive and finite");
  }
}

GroupData::GroupData(long long y_, long long n_) : y(y_), n(n_) {
  if (n < 1) throw std::domain_error("group needs at least one trial");
  if (y < 0 || y > n) throw std::domain_error("successes must lie in [0, n]");
}

double inv_logit(double eta) noexcept {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

ExtendedQuantile std_normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability outside [0, 1]");
  if (p == 0.0) return {-ExtendedQuantile::kInf};
  if (p == 1.0) return {ExtendedQuantile::kInf};
  if (p > 0.5) return {-std_normal_quantile(1.0 - p).value};
  double x = acklam_lower(p);
  // Two Halley steps against erfc bring the error to rounding level.
  for (int i = 0; i < 2; ++i) {
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return {x};
}

double binom_pmf(long long y, long long n, double theta) {
  if (n < 0 || y < 0 || y > n) throw std::domain_error("binom_pmf needs 0 <= y <= n");
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  if (theta == 0.0) return y == 0 ? 1.0 : 0.0;
  if (theta == 1.0) return y == n ? 1.0 : 0.0;
  const double dn = static_cast<double>(n);
  const double dy = static_cast<double>(y);
  const double log_c = std::lgamma(dn + 1.0) - std::lgamma(dy + 1.0) - std::lgamma(dn - dy + 1.0);
  return std::exp(log_c + dy * std::log(theta) + (dn - dy) * std::log1p(-theta));
}

std::vector<double> log_binom_coefficients(long long n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  const double lg_n = std::lgamma(static_cast<double>(n) + 1.0);
  for (long long y = 0; y <= n; ++y) {
    c[static_cast<std::size_t>(y)] = lg_n - std::lgamma(static_cast<double>(y) + 1.0) -
                                     std::lgamma(static_cast<double>(n - y) + 1.0);
  }
  return c;
}

MarginalModel::MarginalModel(long long n, const LogitNormalPrior& prior) : n_(n), prior_(prior) {
  if (n < 1) throw std::domain_error("marginal needs n >= 1");
  const std::size_t dim = static_cast<std::size_t>(n + 1);
  const std::vector<double> log_c = log_binom_coefficients(n);
  const double dn = static_cast<double>(n);
  auto integrand = [&](double eta, std::span<double> out) {
    const double lp = log_inv_logit(eta);
    const double lq = log_inv_logit(-eta);
    const double w = normal_density(eta, prior.mu(), prior.tau());
    for (std::size_t y = 0; y < dim; ++y) {
      const double dy = static_cast<double>(y);
      out[y] = std::exp(log_c[y] + dy * lp + (dn - dy) * lq) * w;
    }
  };
  const std::vector<double> breaks = prior_breaks(prior);
  quad::Options opt;
  opt.rel_tol = kMarginalRelTol;
  quad::Result r;
  try {
    r = quad::integrate(integrand, dim, breaks, opt);
  } catch (const NumericError& e) {
    throw NumericError(std::string("marginal pmf: ") + e.what(), e.achieved());
  }
  pmf_ = std::move(r.value);
  quad_error_ = r.error;
  cumulative_.assign(dim + 1, 0.0);
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t y = 0; y < dim; ++y) {
    cumulative_[y + 1] = cumulative_[y] + pmf_[y];
    const double dy = static_cast<double>(y);
    m1 += dy * pmf_[y];
    m2 += dy * dy * pmf_[y];
  }
  mean_y_ = m1;
  variance_y_ = std::max(0.0, m2 - m1 * m1);
}

double MarginalModel::pmf(long long y) const {
  if (y < 0 || y > n_) throw std::domain_error("marginal_pmf needs 0 <= y <= n");
  return pmf_[static_cast<std::size_t>(y)];
}

double MarginalModel::mass(long long lo, long long hi) const noexcept {
  lo = std::max(lo, 0LL);
  hi = std::min(hi, n_);
  if (hi < lo) return 0.0;
  return cumulative_[static_cast<std::size_t>(hi + 1)] - cumulative_[static_cast<std::size_t>(lo)];
}

namespace {

struct MarginalCache {
  std::mutex mutex;
  std::map<std::tuple<long long, std::uint64_t, std::uint64_t>, std::shared_ptr<const MarginalModel>>
      entries;
};

MarginalCache& marginal_cache() {
  static MarginalCache cache;
  return cache;
}

constexpr std::size_t kMarginalCacheLimit = 1024;

}  // namespace

std::shared_ptr<const MarginalModel> marginal_model(long long n, const LogitNormalPrior& prior) {
  auto& cache = marginal_cache();
  const auto key = std::tuple{n, bits_of(prior.mu()), bits_of(prior.tau2())};
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
  }
  auto model = std::make_shared<const MarginalModel>(n, prior);
  std::lock_guard lock(cache.mutex);
  if (cache.entries.size() >= kMarginalCacheLimit) cache.entries.clear();
  auto [it, inserted] = cache.entries.emplace(key, std::move(model));
  return it->second;
}

void clear_marginal_cache() {
  auto& cache = marginal_cache();
  std::lock_guard lock(cache.mutex);
  cache.entries.clear();
}

double marginal_pmf(long long y, long long n, const LogitNormalPrior& prior) {
  if (y < 0 || y > n) throw std::domain_error("marginal_pmf needs 0 <= y <= n");
  return marginal_model(n, prior)->pmf(y);
}

double marginal_variance_y(long long n, const LogitNormalPrior& prior) {
  return marginal_model(n, prior)->variance_y();
}

namespace {

struct ThetaMoments {
  double mean;
  double variance;
};

ThetaMoments theta_moments(const LogitNormalPrior& prior) {
  const std::vector<double> breaks = prior_breaks(prior);
  quad::Options opt;
  opt.rel_tol = kMomentRelTol;
  auto first = [&](double eta, std::span<double> out) {
    const double w = normal_density(eta, prior.mu(), prior.tau());
    out[0] = w;
    out[1] = inv_logit(eta) * w;
  };
  const quad::Result r1 = quad::integrate(first, 2, breaks, opt);
  const double mass = r1.value[0];
  const double m = r1.value[1] / mass;
  auto second = [&](double eta, std::span<double> out) {
    const double d = inv_logit(eta) - m;
    out[0] = d * d * normal_density(eta, prior.mu(), prior.tau());
  };
  opt.abs_tol = 1e-300;
  const quad::Result r2 = quad::integrate(second, 1, breaks, opt);
  return {m, r2.value[0] / mass};
}

}  // namespace

double variance_theta(const LogitNormalPrior& prior) {
  try {
    return theta_moments(prior).variance;
  } catch (const NumericError& e) {
    throw NumericError(std::string("variance_theta: ") + e.what(), e.achieved());
  }
}

double mean_theta(const LogitNormalPrior& prior) { return theta_moments(prior).mean; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

MonteCarloEstimate sample_variance(const std::vector<double>& xs) {
  const double count = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= count;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - mean) * (x - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= count;
  m4 /= count;
  const double var = m2 * count / (count - 1.0);
  return {var, std::sqrt(std::max(0.0, m4 - m2 * m2) / count)};
}

}  // namespace

MonteCarloEstimate mc_variance_theta(const LogitNormalPrior& prior, std::size_t draws,
                                     std::uint64_t seed) {
  if (draws < 2) throw std::domain_error("need at least two draws");
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> eta(prior.mu(), prior.tau());
  std::vector<double> xs(draws);
  for (double& x : xs) x = inv_logit(eta(rng));
  return sample_variance(xs);
}

MonteCarloEstimate mc_variance_y(long long n, const LogitNormalPrior& prior, std::size_t draws,
                                 std::uint64_t seed) {
  if (draws < 2) throw std::domain_error("need at least two draws");
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> eta(prior.mu(), prior.tau());
  std::vector<double> xs(draws);
  for (double& x : xs) {
    std::binomial_distribution<long long> y(n, inv_logit(eta(rng)));
    x = static_cast<double>(y(rng));
  }
  return sample_variance(xs);
}

}  // namespace fabci
