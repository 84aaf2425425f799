#pragma once

// Wald, Agresti-Coull and Wilson score intervals for a binomial proportion.

#include "fabci/interval.hpp"

namespace fabci::classic {

/// theta_hat + z_{alpha/2} se .. theta_hat + z_{1-alpha/2} se with the plug-in
/// standard error sqrt(theta_hat (1 - theta_hat) / n).
ProportionInterval wald(double theta_hat, double n, double alpha);

/// Wald on (y + 2) / (n + 4) with n + 4 trials.
ProportionInterval agresti_coull(long long y, long long n, double alpha);

/// Continuous-center variant used for poststratified estimates:
/// center (n theta_hat + 2) / (n + 4).
ProportionInterval agresti_coull_at(double theta_hat, double n, double alpha);

/// Score-test inversion, closed form with the n / (n + z^2) scaling.
ProportionInterval wilson(double theta_hat, double n, double alpha);

}  // namespace fabci::classic
