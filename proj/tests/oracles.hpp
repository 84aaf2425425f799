#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library's numerical code: they use boost for normal
// quantiles, fixed-step Simpson rules instead of adaptive quadrature, plain
// sampling instead of integration, and exhaustive grids instead of bisection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

inline double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(0.0, 1.0), x);
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// n! / (y! (n-y)!) theta^y (1-theta)^(n-y) by repeated multiplication.
inline double binom_pmf_direct(int y, int n, double theta) {
  long double c = 1.0L;
  for (int k = 1; k <= y; ++k) c = c * (n - y + k) / k;
  return static_cast<double>(c * std::pow(static_cast<long double>(theta), y) *
                             std::pow(static_cast<long double>(1.0 - theta), n - y));
}

inline double log_binom_pmf(long long y, long long n, double theta) {
  if (theta <= 0.0) return y == 0 ? 0.0 : -kInf;
  if (theta >= 1.0) return y == n ? 0.0 : -kInf;
  return std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0) + y * std::log(theta) +
         (n - y) * std::log1p(-theta);
}

/// Composite Simpson rule with `panels` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Marginal pmf of y under logit(theta) ~ N(mu, tau2), Simpson over
/// [mu - 12 tau, mu + 12 tau].
inline std::vector<double> marginal_pmf(long long n, double mu, double tau2, int panels = 20000) {
  const double tau = std::sqrt(tau2);
  std::vector<double> pmf(static_cast<std::size_t>(n + 1));
  for (long long y = 0; y <= n; ++y) {
    pmf[static_cast<std::size_t>(y)] = simpson(
        [&](double eta) {
          const double z = (eta - mu) / tau;
          return std::exp(log_binom_pmf(y, n, expit(eta)) - 0.5 * z * z) / (tau * std::sqrt(2.0 * M_PI));
        },
        mu - 12.0 * tau, mu + 12.0 * tau, panels);
  }
  return pmf;
}

inline std::pair<double, double> mean_var(const std::vector<double>& pmf) {
  double m = 0.0;
  double m2 = 0.0;
  for (std::size_t y = 0; y < pmf.size(); ++y) {
    m += static_cast<double>(y) * pmf[y];
    m2 += static_cast<double>(y * y) * pmf[y];
  }
  return {m, m2 - m * m};
}

inline double variance_theta(double mu, double tau2) {
  const double tau = std::sqrt(tau2);
  auto moment = [&](int k) {
    return simpson(
        [&](double eta) {
          const double z = (eta - mu) / tau;
          return std::pow(expit(eta), k) * std::exp(-0.5 * z * z) / (tau * std::sqrt(2.0 * M_PI));
        },
        mu - 12.0 * tau, mu + 12.0 * tau, 20000);
  };
  const double m1 = moment(1);
  return moment(2) - m1 * m1;
}

// --- Metropolis sampler on eta = logit(theta) -------------------------------

struct ChainSummary {
  double mean = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;  // batch-means standard error
  double sd_se = 0.0;
};

/// Random-walk Metropolis for eta | y with eta ~ N(mu, tau2); summarizes
/// g(eta) for g = identity (logit scale) or expit (theta scale).
struct MetropolisResult {
  ChainSummary logit;
  ChainSummary theta;
};

inline ChainSummary summarize_chain(const std::vector<double>& x, std::size_t batches = 100) {
  const std::size_t m = x.size() / batches;
  std::vector<double> bm(batches);
  std::vector<double> bs(batches);
  double total = 0.0;
  double total2 = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = b * m; i < (b + 1) * m; ++i) {
      s += x[i];
      s2 += x[i] * x[i];
    }
    bm[b] = s / m;
    bs[b] = std::sqrt(std::max(0.0, s2 / m - bm[b] * bm[b]));
    total += s;
    total2 += s2;
  }
  const double n = static_cast<double>(m * batches);
  ChainSummary out;
  out.mean = total / n;
  out.sd = std::sqrt(std::max(0.0, total2 / n - out.mean * out.mean));
  auto se = [&](const std::vector<double>& v) {
    double a = 0.0;
    for (double t : v) a += t;
    a /= v.size();
    double q = 0.0;
    for (double t : v) q += (t - a) * (t - a);
    return std::sqrt(q / (v.size() - 1) / v.size());
  };
  out.mean_se = se(bm);
  out.sd_se = se(bs);
  return out;
}

inline MetropolisResult metropolis(long long y, long long n, double mu, double tau2, std::size_t draws,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto logpost = [&](double eta) {
    return log_binom_pmf(y, n, expit(eta)) - 0.5 * (eta - mu) * (eta - mu) / tau2;
  };
  // Proposal scale from the curvature of the approximate posterior.
  const double info = n * 0.25 + 1.0 / tau2;
  const double scale = 2.4 / std::sqrt(info);
  double eta = mu;
  double lp = logpost(eta);
  for (int i = 0; i < 20000; ++i) {  // burn-in
    const double prop = eta + scale * step(rng);
    const double lq = logpost(prop);
    if (std::log(unif(rng)) < lq - lp) {
      eta = prop;
      lp = lq;
    }
  }
  std::vector<double> logit(draws);
  std::vector<double> theta(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const double prop = eta + scale * step(rng);
    const double lq = logpost(prop);
    if (std::log(unif(rng)) < lq - lp) {
      eta = prop;
      lp = lq;
    }
    logit[i] = eta;
    theta[i] = expit(eta);
  }
  return {summarize_chain(logit), summarize_chain(theta)};
}

// --- Exhaustive FAB -----------------------------------------------------------

enum class Type { Wald, AC, Wilson };

struct BruteConfig {
  Type type = Type::Wilson;
  bool penalty = false;
  double alpha = 0.05;
  long long n = 10;
  double mu = 0.0;
  double tau2 = 1.0;
  int s_steps = 1000;      // s grid k / s_steps
  int theta_steps = 1000;  // theta grid j / theta_steps
};

/// Exhaustive FAB construction: s(theta) by a dense scan with ties broken by
/// the shortest band (first on equal length), coverage on a dense theta grid,
/// longest covered run (midpoint nearest the center, then lower), no
/// bisection. Spending values depend only on the configuration, so one
/// object serves every y.
class BruteFab {
 public:
  explicit BruteFab(const BruteConfig& c) : c_(c) {
    pmf_ = marginal_pmf(c.n, c.mu, c.tau2);
    const double n = static_cast<double>(c.n);
    const double var_y = mean_var(pmf_).second;
    switch (c.type) {
      case Type::Wald: sigma_ = std::sqrt(var_y) / n; break;
      case Type::AC: sigma_ = std::sqrt(var_y) / (n + 4.0); break;
      case Type::Wilson: sigma_ = std::sqrt(variance_theta(c.mu, c.tau2)); break;
    }
    for (int k = 0; k <= c.s_steps; ++k) {
      const double s = static_cast<double>(k) / c.s_steps;
      zlo_.push_back(normal_quantile((1.0 - s) * c.alpha));
      zhi_.push_back(normal_quantile(1.0 - s * c.alpha));
    }
    s_.resize(static_cast<std::size_t>(c.theta_steps + 1));
    for (int j = 0; j <= c.theta_steps; ++j) s_[j] = learn(theta(j));
  }

  double theta(int j) const { return static_cast<double>(j) / c_.theta_steps; }
  double s_at(int j) const { return static_cast<double>(s_[j]) / c_.s_steps; }

  double stat(long long y) const {
    const double n = static_cast<double>(c_.n);
    return c_.type == Type::AC ? (y + 2.0) / (n + 4.0) : y / n;
  }

  double risk(double th, int k) const {
    const double lo = th + band(sigma_, zlo_[k]);
    const double hi = th + band(sigma_, zhi_[k]);
    if (c_.penalty && (lo < 0.0 || hi > 1.0)) return 1.0 + std::max(-lo, hi - 1.0);
    const double a = std::max(0.0, lo);
    const double b = std::min(1.0, hi);
    double r = 0.0;
    for (long long y = 0; y <= c_.n; ++y) {
      const double t = stat(y);
      if (a <= t && t <= b) r += pmf_[static_cast<std::size_t>(y)];
    }
    return r;
  }

  int learn(double th) const {
    const int k0 = c_.penalty ? c_.s_steps / 100 : 0;
    const int k1 = c_.penalty ? c_.s_steps - c_.s_steps / 100 : c_.s_steps;
    double best = kInf;
    for (int k = k0; k <= k1; ++k) best = std::min(best, risk(th, k));
    int lo = k0;
    while (risk(th, lo) > best + 1e-12) ++lo;
    int hi = k1;
    while (risk(th, hi) > best + 1e-12) --hi;
    // shortest band anywhere between the first and last minimizer
    int pick = -1;
    double pick_len = kInf;
    for (int k = lo; k <= hi; ++k) {
      const double len = std::min(1.0, th + band(sigma_, zhi_[k])) - std::max(0.0, th + band(sigma_, zlo_[k]));
      if (len < pick_len) {
        pick_len = len;
        pick = k;
      }
    }
    return pick;
  }

  /// [lower, upper], or nullopt-like {1, 0} when nothing is covered.
  std::pair<double, double> interval(long long y) const {
    const double n = static_cast<double>(c_.n);
    const double center = stat(y);
    const double that = y / n;
    std::vector<bool> cov(static_cast<std::size_t>(c_.theta_steps + 1));
    for (int j = 0; j <= c_.theta_steps; ++j) {
      const double th = theta(j);
      double scale = 0.0;
      switch (c_.type) {
        case Type::Wald: scale = std::sqrt(that * (1.0 - that) / n); break;
        case Type::AC: scale = std::sqrt(center * (1.0 - center) / (n + 4.0)); break;
        case Type::Wilson: scale = std::sqrt(th * (1.0 - th) / n); break;
      }
      const int k = s_[j];
      const double lo = std::max(0.0, th + band(scale, zlo_[k]));
      const double hi = std::min(1.0, th + band(scale, zhi_[k]));
      cov[j] = lo <= center && center <= hi;
    }
    int best_a = -1;
    int best_b = -1;
    for (int a = 0; a <= c_.theta_steps;) {
      if (!cov[a]) {
        ++a;
        continue;
      }
      int b = a;
      while (b + 1 <= c_.theta_steps && cov[b + 1]) ++b;
      const bool longer = best_a < 0 || b - a > best_b - best_a;
      const bool tie_closer = best_a >= 0 && b - a == best_b - best_a &&
                              std::abs(0.5 * (theta(a) + theta(b)) - center) <
                                  std::abs(0.5 * (theta(best_a) + theta(best_b)) - center);
      if (longer || tie_closer) {
        best_a = a;
        best_b = b;
      }
      a = b + 1;
    }
    if (best_a < 0) return {1.0, 0.0};
    return {theta(best_a), theta(best_b)};
  }

 private:
  static double band(double scale, double z) {
    if (scale == 0.0) return 0.0;
    return scale * z;
  }

  BruteConfig c_;
  std::vector<double> pmf_;
  double sigma_ = 0.0;
  std::vector<double> zlo_;
  std::vector<double> zhi_;
  std::vector<int> s_;
};

// --- Coverage ---------------------------------------------------------------

/// Sum over y of P(y | theta) 1(lo(y) <= theta <= hi(y)).
inline double naive_coverage(double theta, int n,
                             const std::function<std::pair<double, double>(int)>& interval) {
  double c = 0.0;
  for (int y = 0; y <= n; ++y) {
    const auto [lo, hi] = interval(y);
    double p = 0.0;
    if (theta == 0.0) {
      p = y == 0 ? 1.0 : 0.0;
    } else if (theta == 1.0) {
      p = y == n ? 1.0 : 0.0;
    } else {
      p = binom_pmf_direct(y, n, theta);
    }
    if (lo <= theta && theta <= hi) c += p;
  }
  return c;
}

}  // namespace oracle
