#pragma once

// Bootstrap-replicate evaluation of domain intervals on a poststratification
// table with known cell probabilities.
//
// Each replicate draws J cells uniformly with replacement (J = table size),
// folds duplicates into one cell with n scaled by the multiplicity, simulates
// y_j ~ Binomial(n_j, pi_j), and builds every requested interval for every
// domain. Coverage is measured against the poststratified truth
// sum N_j pi_j / sum N_j.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fabci/coverage_lab.hpp"
#include "fabci/poststrat.hpp"

namespace fabci::coverage {

struct HarnessOptions {
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  LogitNormalPrior prior{-3.4760986898352733, 0.25};  // logit(0.03)
  double alpha = 0.05;
  std::vector<MethodSpec> methods;  // empty: harness_default_methods()
  double grid_step = 0.01;
  unsigned jobs = 1;
};

/// credible, the three classic intervals, default FAB Wald and penalized FAB
/// Wilson and AC.
std::vector<MethodSpec> harness_default_methods();

struct MethodTally {
  std::size_t evaluated = 0;
  std::size_t covered = 0;
  std::size_t empty_region = 0;  // counted as not covering
  double length_sum = 0.0;

  double coverage() const noexcept;
  double mean_length() const noexcept;
};

struct DomainResult {
  std::string domain_id;
  double truth = 0.0;
  std::size_t missing = 0;  // replicates where the domain had no observed cell
  std::vector<MethodTally> methods;
};

struct MethodAggregate {
  std::string method;
  double median_coverage = 0.0;
  double mean_coverage = 0.0;
  double mean_domain_length = 0.0;  // mean over domains of per-domain mean length
  double pooled_mean_length = 0.0;  // mean over all (domain, replicate) intervals
};

struct HarnessSummary {
  HarnessOptions options;
  std::vector<DomainResult> domains;
  std::vector<MethodAggregate> aggregate;

  const MethodAggregate& aggregate_for(const std::string& method) const;
};

/// One bootstrap replicate of `truth` (exposed for tests).
poststrat::PoststratTable bootstrap_replicate(const poststrat::PoststratTable& truth,
                                              std::uint64_t seed, std::size_t replicate);

HarnessSummary replicate_harness(const poststrat::PoststratTable& truth, const HarnessOptions& options);

nlohmann::ordered_json to_json(const HarnessSummary& summary);

struct SyntheticOptions {
  std::size_t domains = 30;
  std::uint64_t seed = 2024;
  double base_rate = 0.03;
  double domain_sd = 0.5;
  double effect_sd = 0.4;
  double mean_tests = 250.0;  // median tests per domain
  double population_sd = 0.8;  // log-scale spread of cell population counts
  double age_selection = 0.3;  // log test-rate increase per age group
};

/// Synthetic table with sex x age x race cells (30 per domain), population
/// counts, test counts skewed toward older cells, pi_true from a logistic
/// model, and one simulated y per cell.
poststrat::PoststratTable synthetic_truth_table(const SyntheticOptions& options);

}  // namespace fabci::coverage
