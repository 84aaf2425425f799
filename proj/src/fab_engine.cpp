#include "fabci/fab_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fabci/errors.hpp"
#include "fabci/parallel.hpp"

namespace fabci::fab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

}  // namespace

std::string to_string(IntervalType t) {
  switch (t) {
    case IntervalType::Wald: return "wald";
    case IntervalType::AgrestiCoull: return "ac";
    case IntervalType::Wilson: return "wilson";
  }
  return "unknown";
}

std::string to_string(RiskMode m) {
  return m == RiskMode::Default ? "default" : "all-in-penalty";
}

IntervalMethod fab_method(IntervalType t) noexcept {
  switch (t) {
    case IntervalType::Wald: return IntervalMethod::FabWald;
    case IntervalType::AgrestiCoull: return IntervalMethod::FabAgrestiCoull;
    case IntervalType::Wilson: return IntervalMethod::FabWilson;
  }
  return IntervalMethod::FabWald;
}

void FabConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  if (n < 1) throw std::domain_error("FAB needs n >= 1");
  if (!(grid_step > 0.0 && grid_step <= 0.1)) throw std::domain_error("grid_step must lie in (0, 0.1]");
  const double k = 1.0 / grid_step;
  if (std::abs(k - std::round(k)) > 1e-9 * k) {
    throw std::domain_error("1 / grid_step must be an integer");
  }
  if (bisection_iters < 0) throw std::domain_error("bisection_iters must be non-negative");
}

std::size_t FabConfig::grid_intervals() const {
  return static_cast<std::size_t>(std::llround(1.0 / grid_step));
}

double FabConfig::grid_theta(std::size_t k) const {
  return static_cast<double>(k) / static_cast<double>(grid_intervals());
}

std::string FabConfig::cache_key() const {
  return to_string(type) + "|" + to_string(mode) + "|alpha=" + hex(alpha) + "|n=" + std::to_string(n) +
         "|mu=" + hex(prior.mu()) + "|tau2=" + hex(prior.tau2()) + "|step=" + hex(grid_step) +
         "|iters=" + std::to_string(bisection_iters);
}

RiskInterval untruncated_band(double theta, double s, double sigma, double alpha) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("spending value outside [0, 1]");
  if (!(sigma >= 0.0)) throw std::domain_error("scale must be non-negative");
  if (sigma == 0.0) return {theta, theta};
  const double z_lo = std_normal_quantile((1.0 - s) * alpha);
  const double z_hi = std_normal_quantile(1.0 - s * alpha);
  return {theta + sigma * z_lo, theta + sigma * z_hi};
}

RiskInterval risk_interval(double theta, double s, double sigma, double alpha) {
  const RiskInterval raw = untruncated_band(theta, s, sigma, alpha);
  return {std::max(0.0, raw.lower), std::min(1.0, raw.upper)};
}

std::optional<double> all_in_penalty(double theta, double s, double sigma, double alpha) {
  const RiskInterval raw = untruncated_band(theta, s, sigma, alpha);
  if (!(raw.lower < 0.0 || raw.upper > 1.0)) return std::nullopt;
  return 1.0 + std::max(-raw.lower, raw.upper - 1.0);
}

// ---------------------------------------------------------------------------

RiskModel::RiskModel(const FabConfig& config) : config_(config) {
  config_.validate();
  marginal_ = marginal_model(config_.n, config_.prior);
  const double n = static_cast<double>(config_.n);
  switch (config_.type) {
    case IntervalType::Wald: sigma_ = std::sqrt(marginal_->variance_y()) / n; break;
    case IntervalType::AgrestiCoull: sigma_ = std::sqrt(marginal_->variance_y()) / (n + 4.0); break;
    case IntervalType::Wilson: sigma_ = std::sqrt(variance_theta(config_.prior)); break;
  }
}

double RiskModel::statistic(long long y) const noexcept {
  const double n = static_cast<double>(config_.n);
  if (config_.type == IntervalType::AgrestiCoull) return (static_cast<double>(y) + 2.0) / (n + 4.0);
  return static_cast<double>(y) / n;
}

double RiskModel::risk(double theta, double s) const {
  const RiskInterval raw = untruncated_band(theta, s, sigma_, config_.alpha);
  if (config_.mode == RiskMode::AllInPenalty && (raw.lower < 0.0 || raw.upper > 1.0)) {
    return 1.0 + std::max(-raw.lower, raw.upper - 1.0);
  }
  const double lower = std::max(0.0, raw.lower);
  const double upper = std::min(1.0, raw.upper);
  const long long n = config_.n;
  const double dn = static_cast<double>(n);
  // Index guesses from the inverse statistic, then exact correction against
  // the comparisons a direct scan would make.
  auto guess = [&](double v) {
    const double g = config_.type == IntervalType::AgrestiCoull ? v * (dn + 4.0) - 2.0 : v * dn;
    return static_cast<long long>(std::clamp(std::floor(g), -1.0, dn + 1.0));
  };
  long long lo = std::clamp(guess(lower), 0LL, n);
  while (lo > 0 && statistic(lo - 1) >= lower) --lo;
  while (lo <= n && statistic(lo) < lower) ++lo;
  long long hi = std::clamp(guess(upper), 0LL, n);
  while (hi < n && statistic(hi + 1) <= upper) ++hi;
  while (hi >= 0 && statistic(hi) > upper) --hi;
  return marginal_->mass(lo, hi);
}

double RiskModel::band_length(double theta, double s) const {
  return risk_interval(theta, s, sigma_, config_.alpha).length();
}

SpendingChoice RiskModel::learn(double theta) const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  const bool penalty = config_.mode == RiskMode::AllInPenalty;
  const int steps = static_cast<int>(std::lround(1.0 / kSpendStep));
  // s = 0 and s = 1 carry an infinite penalty; the penalized search keeps to
  // the innermost grid values.
  const int k_first = penalty ? 1 : 0;
  const int k_last = penalty ? steps - 1 : steps;
  auto grid_s = [&](int k) { return static_cast<double>(k) / steps; };

  double best = kInf;
  std::vector<double> risks(static_cast<std::size_t>(steps + 1), kInf);
  for (int k = k_first; k <= k_last; ++k) {
    risks[static_cast<std::size_t>(k)] = risk(theta, grid_s(k));
    best = std::min(best, risks[static_cast<std::size_t>(k)]);
  }
  auto ties = [&](double r) { return r <= best + kRiskTieTolerance; };
  int g_min = k_first;
  while (!ties(risks[static_cast<std::size_t>(g_min)])) ++g_min;
  int g_max = k_last;
  while (!ties(risks[static_cast<std::size_t>(g_max)])) --g_max;

  const int iters = config_.bisection_iters;
  double s_min = grid_s(g_min);
  if (g_min > k_first) {
    double out = grid_s(g_min - 1);
    double in = s_min;
    for (int i = 0; i < iters; ++i) {
      const double mid = 0.5 * (out + in);
      if (ties(risk(theta, mid))) in = mid; else out = mid;
    }
    s_min = in;
  }
  double s_max = grid_s(g_max);
  if (g_max < k_last) {
    double in = s_max;
    double out = grid_s(g_max + 1);
    for (int i = 0; i < iters; ++i) {
      const double mid = 0.5 * (in + out);
      if (ties(risk(theta, mid))) in = mid; else out = mid;
    }
    s_max = in;
  }

  // Shortest band anywhere in [s_min, s_max]. Points in between are not
  // re-checked for risk: when the minimal-risk grid values form two separate
  // runs the band can land between them.
  SpendingChoice choice{s_min, 0.0, s_min, s_max};
  double best_len = band_length(theta, s_min);
  auto consider = [&](double s) {
    const double len = band_length(theta, s);
    if (len < best_len) {
      best_len = len;
      choice.s = s;
    }
  };
  if (s_max > s_min) {
    for (int j = 1; j <= kTieInteriorPoints; ++j) {
      consider(s_min + (s_max - s_min) * j / (kTieInteriorPoints + 1));
    }
    consider(s_max);
  }
  choice.risk = risk(theta, choice.s);
  return choice;
}

double pointwise_risk(double theta, double s, const FabConfig& config) {
  return RiskModel(config).risk(theta, s);
}

double learn_spending_at(double theta, const FabConfig& config) {
  return RiskModel(config).learn(theta).s;
}

SpendingTable build_spending_table(const FabConfig& config, unsigned jobs) {
  const RiskModel model(config);
  SpendingTable table;
  table.config = config;
  const std::size_t points = config.grid_intervals() + 1;
  table.grid.resize(points);
  parallel_for(points, jobs, [&](std::size_t k) {
    const double theta = config.grid_theta(k);
    table.grid[k] = {theta, model.learn(theta).s};
  });
  return table;
}

namespace {

struct SpendingCache {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const SpendingTable>> entries;
  std::shared_ptr<SpendingStore> store;
};

SpendingCache& spending_cache() {
  static SpendingCache cache;
  return cache;
}

}  // namespace

std::shared_ptr<const SpendingTable> cached_spending_table(const FabConfig& config, unsigned jobs) {
  auto& cache = spending_cache();
  const std::string key = config.cache_key();
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
  }
  std::shared_ptr<SpendingStore> store;
  {
    std::lock_guard lock(cache.mutex);
    store = cache.store;
  }
  std::shared_ptr<const SpendingTable> table;
  if (store) table = store->load(config);
  if (!table || table->config.cache_key() != key) {
    table = std::make_shared<const SpendingTable>(build_spending_table(config, jobs));
    if (store) store->save(*table);
  }
  std::lock_guard lock(cache.mutex);
  if (cache.entries.size() >= 512) cache.entries.clear();
  return cache.entries.emplace(key, std::move(table)).first->second;
}

void store_spending_table(std::shared_ptr<const SpendingTable> table) {
  auto& cache = spending_cache();
  std::lock_guard lock(cache.mutex);
  cache.entries[table->config.cache_key()] = std::move(table);
}

void set_spending_store(std::shared_ptr<SpendingStore> store) {
  auto& cache = spending_cache();
  std::lock_guard lock(cache.mutex);
  cache.store = std::move(store);
}

void clear_spending_cache() {
  auto& cache = spending_cache();
  std::lock_guard lock(cache.mutex);
  cache.entries.clear();
}

// ---------------------------------------------------------------------------

FabIntervalBuilder::FabIntervalBuilder(const FabConfig& config,
                                       std::shared_ptr<const SpendingTable> table)
    : risk_(config), table_(std::move(table)) {
  if (!table_) throw std::domain_error("missing spending table");
  if (table_->config.cache_key() != config.cache_key()) {
    throw std::domain_error("spending table was built for a different configuration");
  }
  if (table_->grid.size() != config.grid_intervals() + 1) {
    throw std::domain_error("spending table has the wrong number of grid points");
  }
}

FabIntervalBuilder::FabIntervalBuilder(const FabConfig& config, unsigned jobs)
    : FabIntervalBuilder(config, cached_spending_table(config, jobs)) {}

double FabIntervalBuilder::center_for(double theta_hat) const noexcept {
  if (config().type == IntervalType::AgrestiCoull) {
    const double n = static_cast<double>(config().n);
    return (n * theta_hat + 2.0) / (n + 4.0);
  }
  return theta_hat;
}

double FabIntervalBuilder::determination_scale(double theta, double center) const noexcept {
  const double n = static_cast<double>(config().n);
  switch (config().type) {
    case IntervalType::Wald: return std::sqrt(std::max(0.0, center * (1.0 - center)) / n);
    case IntervalType::AgrestiCoull: return std::sqrt(std::max(0.0, center * (1.0 - center)) / (n + 4.0));
    case IntervalType::Wilson: return std::sqrt(std::max(0.0, theta * (1.0 - theta)) / n);
  }
  return 0.0;
}

RiskInterval FabIntervalBuilder::determination_interval(double theta, double theta_hat) const {
  const double center = center_for(theta_hat);
  // Grid points reuse the table; anything else is learned afresh.
  const double k = theta * static_cast<double>(config().grid_intervals());
  double s;
  if (std::abs(k - std::round(k)) < 1e-12 && k >= 0.0 && k <= static_cast<double>(config().grid_intervals())) {
    s = table_->grid[static_cast<std::size_t>(std::llround(k))].s;
  } else {
    s = risk_.learn(theta).s;
  }
  return risk_interval(theta, s, determination_scale(theta, center), config().alpha);
}

bool FabIntervalBuilder::covered(double theta, double s, double center) const {
  return risk_interval(theta, s, determination_scale(theta, center), config().alpha).contains(center);
}

ProportionInterval FabIntervalBuilder::interval(const GroupData& data) const {
  if (data.n != config().n) throw std::domain_error("observation n differs from the configuration");
  return interval_at(data.proportion());
}

ProportionInterval FabIntervalBuilder::interval_at(double theta_hat) const {
  if (!(theta_hat >= 0.0 && theta_hat <= 1.0)) throw std::domain_error("estimate outside [0, 1]");
  const double center = center_for(theta_hat);
  const std::vector<SpendingEntry>& grid = table_->grid;
  const std::size_t points = grid.size();

  std::vector<char> hit(points);
  for (std::size_t k = 0; k < points; ++k) hit[k] = covered(grid[k].theta, grid[k].s, center);

  // Longest run of covered grid points; equal lengths go to the run whose
  // midpoint is nearest the center, then to the lower run.
  std::size_t best_a = points;
  std::size_t best_b = points;
  for (std::size_t k = 0; k < points;) {
    if (!hit[k]) {
      ++k;
      continue;
    }
    std::size_t e = k;
    while (e + 1 < points && hit[e + 1]) ++e;
    if (best_a == points) {
      best_a = k;
      best_b = e;
    } else {
      const std::size_t len = e - k;
      const std::size_t best_len = best_b - best_a;
      const double mid = 0.5 * (grid[k].theta + grid[e].theta);
      const double best_mid = 0.5 * (grid[best_a].theta + grid[best_b].theta);
      if (len > best_len || (len == best_len && std::abs(mid - center) < std::abs(best_mid - center))) {
        best_a = k;
        best_b = e;
      }
    }
    k = e + 1;
  }
  if (best_a == points) {
    throw EmptyRegionError("no grid value of theta has a determination band containing the estimate");
  }

  const int iters = config().bisection_iters;
  auto probe = [&](double theta) { return covered(theta, risk_.learn(theta).s, center); };

  double lower = grid[best_a].theta;
  if (best_a > 0) {
    double out = grid[best_a - 1].theta;
    double in = lower;
    for (int i = 0; i < iters; ++i) {
      const double mid = 0.5 * (out + in);
      if (probe(mid)) in = mid; else out = mid;
    }
    lower = in;
  }
  double upper = grid[best_b].theta;
  if (best_b + 1 < points) {
    double in = upper;
    double out = grid[best_b + 1].theta;
    for (int i = 0; i < iters; ++i) {
      const double mid = 0.5 * (in + out);
      if (probe(mid)) in = mid; else out = mid;
    }
    upper = in;
  }
  return make_interval(lower, upper, fab_method(config().type), config().alpha, center);
}

ProportionInterval fab_interval(const GroupData& data, const FabConfig& config) {
  return FabIntervalBuilder(config).interval(data);
}

RiskInterval determination_interval(double theta, const GroupData& data, const FabConfig& config) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  if (data.n != config.n) throw std::domain_error("observation n differs from the configuration");
  return FabIntervalBuilder(config).determination_interval(theta, data.proportion());
}

}  // namespace fabci::fab
