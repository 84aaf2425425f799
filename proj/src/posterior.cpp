#include "fabci/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>

#include "fabci/errors.hpp"
#include "fabci/quadrature.hpp"

namespace fabci::posterior {

namespace {

constexpr double kTruncation = 10.0;
constexpr double kRelTol = 1e-10;

double log_sigmoid(double eta) {
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

std::uint64_t bits_of(double x) {
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

}  // namespace

LogitPosterior::LogitPosterior(const GroupData& data, const LogitNormalPrior& prior)
    : data_(data), prior_(prior) {
  lo_ = prior.mu() - kTruncation * prior.tau();
  hi_ = prior.mu() + kTruncation * prior.tau();
  const double y = static_cast<double>(data.y);
  const double n = static_cast<double>(data.n);

  // Score of the log density; strictly decreasing in eta.
  auto score = [&](double eta) { return y - n * inv_logit(eta) - (eta - prior.mu()) / prior.tau2(); };
  auto curvature = [&](double eta) {
    const double p = inv_logit(eta);
    return n * p * (1.0 - p) + 1.0 / prior.tau2();
  };
  double a = lo_;
  double b = hi_;
  if (score(a) <= 0.0) {
    mode_ = a;
  } else if (score(b) >= 0.0) {
    mode_ = b;
  } else {
    double x = std::clamp(prior.mu(), a, b);
    for (int it = 0; it < 200; ++it) {
      const double g = score(x);
      if (g > 0.0) a = x; else b = x;
      double next = x + g / curvature(x);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) {
        x = next;
        break;
      }
      x = next;
    }
    mode_ = x;
  }
  log_peak_ = 0.0;
  log_peak_ = log_density(mode_);

  const double h = 1.0 / std::sqrt(curvature(mode_));
  std::vector<double> breaks{lo_, hi_, mode_};
  for (double c : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    for (double sgn : {-1.0, 1.0}) {
      const double x = mode_ + sgn * c * h;
      if (x > lo_ && x < hi_) breaks.push_back(x);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  quad::Options opt;
  opt.rel_tol = kRelTol;
  auto first = [&](double eta, std::span<double> out) {
    const double f = std::exp(log_density(eta));
    out[0] = f;
    out[1] = f * eta;
    out[2] = f * inv_logit(eta);
  };
  quad::Result r1;
  try {
    r1 = quad::integrate(first, 3, breaks, opt);
  } catch (const NumericError& e) {
    throw NumericError(std::string("posterior normalizer: ") + e.what(), e.achieved());
  }
  normalizer_ = r1.value[0];
  if (!(normalizer_ > 0.0) || !std::isfinite(normalizer_)) {
    throw NumericError("posterior normalizer is not positive", 1.0);
  }
  mean_logit_ = r1.value[1] / normalizer_;
  mean_theta_ = r1.value[2] / normalizer_;

  auto second = [&](double eta, std::span<double> out) {
    const double f = std::exp(log_density(eta));
    const double dl = eta - mean_logit_;
    const double dt = inv_logit(eta) - mean_theta_;
    out[0] = f * dl * dl;
    out[1] = f * dt * dt;
  };
  opt.abs_tol = 1e-300;
  quad::Result r2;
  try {
    r2 = quad::integrate(second, 2, breaks, opt);
  } catch (const NumericError& e) {
    throw NumericError(std::string("posterior variance: ") + e.what(), e.achieved());
  }
  sd_logit_ = std::sqrt(std::max(0.0, r2.value[0] / normalizer_));
  sd_theta_ = std::sqrt(std::max(0.0, r2.value[1] / normalizer_));

  slabs_.reserve(r1.panels.size());
  cumulative_.reserve(r1.panels.size() + 1);
  cumulative_.push_back(0.0);
  for (const quad::Panel& p : r1.panels) {
    slabs_.push_back({p.a, p.b, p.value[0]});
    cumulative_.push_back(cumulative_.back() + p.value[0]);
  }
  // The slab sum and the reported normalizer agree up to rounding; use the
  // slab sum so the CDF ends exactly at 1.
  normalizer_ = cumulative_.back();
}

double LogitPosterior::log_density(double eta) const {
  const double y = static_cast<double>(data_.y);
  const double n = static_cast<double>(data_.n);
  const double z = (eta - prior_.mu()) / prior_.tau();
  return y * log_sigmoid(eta) + (n - y) * log_sigmoid(-eta) - 0.5 * z * z - log_peak_;
}

double LogitPosterior::partial_mass(double a, double x) const {
  if (!(x > a)) return 0.0;
  auto f = [&](double eta, std::span<double> out) { out[0] = std::exp(log_density(eta)); };
  return quad::kronrod_panel(f, 1, a, x).value[0];
}

double LogitPosterior::cdf(double eta) const {
  if (eta <= lo_) return 0.0;
  if (eta >= hi_) return 1.0;
  auto it = std::upper_bound(slabs_.begin(), slabs_.end(), eta,
                             [](double x, const Slab& s) { return x < s.a; });
  const std::size_t k = static_cast<std::size_t>(std::distance(slabs_.begin(), it)) - 1;
  const double m = cumulative_[k] + std::min(partial_mass(slabs_[k].a, eta), slabs_[k].mass);
  return std::clamp(m / normalizer_, 0.0, 1.0);
}

double LogitPosterior::quantile_logit(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability outside [0, 1]");
  if (p == 0.0) return lo_;
  if (p == 1.0) return hi_;
  const double target = p * normalizer_;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t k = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, slabs_.size()) - 1;
  const Slab& s = slabs_[k];
  const double need = target - cumulative_[k];
  double a = s.a;
  double b = s.b;
  for (int it2 = 0; it2 < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it2) {
    const double m = 0.5 * (a + b);
    if (partial_mass(s.a, m) < need) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

PosteriorSummary posterior_summary(const GroupData& data, const LogitNormalPrior& prior,
                                   double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  const LogitPosterior post(data, prior);
  PosteriorSummary s;
  s.mean_theta = post.mean_theta();
  s.sd_theta = post.sd_theta();
  s.mean_logit = post.mean_logit();
  s.sd_logit = post.sd_logit();
  s.mode_logit = post.mode();
  s.median_theta = post.quantile_theta(0.5);
  s.credible = make_interval(post.quantile_theta(alpha / 2.0), post.quantile_theta(1.0 - alpha / 2.0),
                             IntervalMethod::Credible, alpha, s.mean_theta);
  return s;
}

CredibleTable::CredibleTable(long long n, const LogitNormalPrior& prior, double alpha) : n_(n) {
  if (n < 1) throw std::domain_error("credible table needs n >= 1");
  intervals_.reserve(static_cast<std::size_t>(n + 1));
  for (long long y = 0; y <= n; ++y) {
    intervals_.push_back(posterior_summary(GroupData(y, n), prior, alpha).credible);
  }
}

std::shared_ptr<const CredibleTable> credible_table(long long n, const LogitNormalPrior& prior,
                                                    double alpha) {
  static std::mutex mutex;
  static std::map<std::tuple<long long, std::uint64_t, std::uint64_t, std::uint64_t>,
                  std::shared_ptr<const CredibleTable>>
      cache;
  const auto key = std::tuple{n, bits_of(prior.mu()), bits_of(prior.tau2()), bits_of(alpha)};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<const CredibleTable>(n, prior, alpha);
  std::lock_guard lock(mutex);
  if (cache.size() >= 256) cache.clear();
  return cache.emplace(key, std::move(table)).first->second;
}

double credible_coverage(double theta, long long n, const LogitNormalPrior& prior, double alpha) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  const auto table = credible_table(n, prior, alpha);
  double cover = 0.0;
  for (long long y = 0; y <= n; ++y) {
    if (table->at(y).contains(theta)) cover += binom_pmf(y, n, theta);
  }
  return cover;
}

}  // namespace fabci::posterior
