#include "fabci/classic_intervals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fabci/stats_kernel.hpp"

namespace fabci {

std::string_view to_string(IntervalMethod m) noexcept {
  switch (m) {
    case IntervalMethod::Wald: return "wald";
    case IntervalMethod::AgrestiCoull: return "ac";
    case IntervalMethod::Wilson: return "wilson";
    case IntervalMethod::Credible: return "credible";
    case IntervalMethod::FabWald: return "fab-wald";
    case IntervalMethod::FabAgrestiCoull: return "fab-ac";
    case IntervalMethod::FabWilson: return "fab-wilson";
  }
  return "unknown";
}

ProportionInterval make_interval(double raw_lower, double raw_upper, IntervalMethod method,
                                 double alpha, double center) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  if (!(raw_lower <= raw_upper)) throw std::domain_error("interval endpoints out of order");
  ProportionInterval ci;
  ci.raw_lower = raw_lower;
  ci.raw_upper = raw_upper;
  ci.lower = std::clamp(raw_lower, 0.0, 1.0);
  ci.upper = std::clamp(raw_upper, 0.0, 1.0);
  ci.method = method;
  ci.alpha = alpha;
  ci.center = center;
  return ci;
}

namespace classic {

namespace {

void check(double theta_hat, double n, double alpha) {
  if (!(n >= 1.0)) throw std::domain_error("interval needs n >= 1");
  if (!(theta_hat >= 0.0 && theta_hat <= 1.0)) throw std::domain_error("estimate outside [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
}

}  // namespace

ProportionInterval wald(double theta_hat, double n, double alpha) {
  check(theta_hat, n, alpha);
  const double se = std::sqrt(theta_hat * (1.0 - theta_hat) / n);
  const double z_lo = std_normal_quantile(alpha / 2.0);
  const double z_hi = std_normal_quantile(1.0 - alpha / 2.0);
  return make_interval(theta_hat + z_lo * se, theta_hat + z_hi * se, IntervalMethod::Wald, alpha,
                       theta_hat);
}

ProportionInterval agresti_coull_at(double theta_hat, double n, double alpha) {
  check(theta_hat, n, alpha);
  const double tilde_n = n + 4.0;
  const double tilde = (n * theta_hat + 2.0) / tilde_n;
  ProportionInterval ci = wald(tilde, tilde_n, alpha);
  ci.method = IntervalMethod::AgrestiCoull;
  return ci;
}

ProportionInterval agresti_coull(long long y, long long n, double alpha) {
  const GroupData g(y, n);
  const double tilde_n = static_cast<double>(g.n) + 4.0;
  const double tilde = (static_cast<double>(g.y) + 2.0) / tilde_n;
  ProportionInterval ci = wald(tilde, tilde_n, alpha);
  ci.method = IntervalMethod::AgrestiCoull;
  return ci;
}

ProportionInterval wilson(double theta_hat, double n, double alpha) {
  check(theta_hat, n, alpha);
  const double z = std_normal_quantile(1.0 - alpha / 2.0);
  const double z2 = z * z;
  const double center = theta_hat + z2 / (2.0 * n);
  const double spread = std::sqrt(theta_hat * (1.0 - theta_hat) / n + z2 / (4.0 * n * n));
  const double scale = n / (n + z2);
  // z_{alpha/2} = -z_{1-alpha/2}. The endpoints are the roots of
  // (1 + z2/n) p^2 - (2 theta_hat + z2/n) p + theta_hat^2 = 0; the root near
  // a boundary comes from the product of roots so that it is exact there.
  const double a = 1.0 + z2 / n;
  double lower = 0.0;
  double upper = 0.0;
  if (theta_hat <= 0.5) {
    upper = scale * (center + z * spread);
    lower = theta_hat * theta_hat / (a * upper);
  } else {
    lower = scale * (center - z * spread);
    const double q = 1.0 - theta_hat;
    upper = 1.0 - q * q / (a * (1.0 - lower));
  }
  return make_interval(lower, upper, IntervalMethod::Wilson, alpha, theta_hat);
}

}  // namespace classic
}  // namespace fabci
