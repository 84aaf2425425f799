#include "fabci/replicate_harness.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

#include "fabci/classic_intervals.hpp"
#include "fabci/errors.hpp"
#include "fabci/parallel.hpp"

namespace fabci::coverage {

std::vector<MethodSpec> harness_default_methods() {
  using F = MethodSpec::Family;
  using T = fab::IntervalType;
  return {{F::Credible, T::Wilson},  {F::Classic, T::Wald},          {F::Classic, T::AgrestiCoull},
          {F::Classic, T::Wilson},   {F::Fab, T::Wald},              {F::FabPenalty, T::AgrestiCoull},
          {F::FabPenalty, T::Wilson}};
}

double MethodTally::coverage() const noexcept {
  return evaluated == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(evaluated);
}

double MethodTally::mean_length() const noexcept {
  const std::size_t built = evaluated - empty_region;
  return built == 0 ? 0.0 : length_sum / static_cast<double>(built);
}

const MethodAggregate& HarnessSummary::aggregate_for(const std::string& method) const {
  for (const MethodAggregate& a : aggregate) {
    if (a.method == method) return a;
  }
  throw std::invalid_argument("method not in harness summary: " + method);
}

poststrat::PoststratTable bootstrap_replicate(const poststrat::PoststratTable& truth,
                                              std::uint64_t seed, std::size_t replicate) {
  const std::vector<poststrat::Cell>& cells = truth.cells();
  const std::size_t J = cells.size();
  if (J == 0) throw std::domain_error("empty truth table");
  std::mt19937_64 rng(derive_seed(seed, replicate));
  std::uniform_int_distribution<std::size_t> pick(0, J - 1);
  std::vector<long long> multiplicity(J, 0);
  for (std::size_t k = 0; k < J; ++k) ++multiplicity[pick(rng)];

  std::vector<poststrat::Cell> out = cells;
  for (std::size_t j = 0; j < J; ++j) {
    poststrat::Cell& c = out[j];
    if (!cells[j].pi_true) throw std::domain_error("truth table needs pi_true for every cell");
    c.n = cells[j].n * multiplicity[j];
    c.y = 0;
    if (c.n > 0) {
      std::binomial_distribution<long long> draw(c.n, *cells[j].pi_true);
      c.y = draw(rng);
    }
    c.post_mean_logit.reset();
    c.post_sd_logit.reset();
  }
  return poststrat::PoststratTable(std::move(out));
}

namespace {

struct Outcome {
  bool built = false;
  bool covered = false;
  double length = 0.0;
};

ProportionInterval domain_interval(const MethodSpec& m, const poststrat::DomainEstimate& est,
                                   const HarnessOptions& opt) {
  using F = MethodSpec::Family;
  const double n = static_cast<double>(est.n_total);
  switch (m.family) {
    case F::Credible: return *est.credible;
    case F::Classic:
      switch (m.type) {
        case fab::IntervalType::Wald: return classic::wald(est.poststrat_mean, n, opt.alpha);
        case fab::IntervalType::AgrestiCoull: return classic::agresti_coull_at(est.poststrat_mean, n, opt.alpha);
        case fab::IntervalType::Wilson: return classic::wilson(est.poststrat_mean, n, opt.alpha);
      }
      break;
    case F::Fab:
    case F::FabPenalty: {
      fab::FabConfig config;
      config.type = m.type;
      config.mode = m.family == F::Fab ? fab::RiskMode::Default : fab::RiskMode::AllInPenalty;
      config.alpha = opt.alpha;
      config.grid_step = opt.grid_step;
      return poststrat::domain_fab_interval(est, config);
    }
  }
  throw std::invalid_argument("unknown method");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

HarnessSummary replicate_harness(const poststrat::PoststratTable& truth, const HarnessOptions& options) {
  if (!truth.has_truth()) throw std::domain_error("truth table needs pi_true for every cell");
  HarnessSummary summary;
  summary.options = options;
  if (summary.options.methods.empty()) summary.options.methods = harness_default_methods();
  const HarnessOptions& opt = summary.options;
  const std::vector<std::string>& domains = truth.domains();
  const std::size_t M = opt.methods.size();
  const std::size_t D = domains.size();

  std::vector<double> truths(D);
  for (std::size_t d = 0; d < D; ++d) truths[d] = poststrat::true_proportion(truth, domains[d]);

  // outcomes[r][d] is empty when the domain was unobserved in replicate r.
  std::vector<std::vector<std::optional<std::vector<Outcome>>>> outcomes(
      opt.replicates, std::vector<std::optional<std::vector<Outcome>>>(D));
  const std::size_t units = opt.replicates * D;
  std::vector<std::optional<poststrat::PoststratTable>> tables(opt.replicates);
  for (std::size_t r = 0; r < opt.replicates; ++r) tables[r] = bootstrap_replicate(truth, opt.seed, r);

  parallel_for(units, opt.jobs, [&](std::size_t u) {
    const std::size_t r = u / D;
    const std::size_t d = u % D;
    const poststrat::PoststratTable& table = *tables[r];
    bool observed = false;
    for (std::size_t i : table.cells_of(domains[d])) observed = observed || table.cells()[i].observed();
    if (!observed) return;
    const poststrat::DomainEstimate est = poststrat::summarize_domain(table, domains[d], opt.prior, opt.alpha);
    std::vector<Outcome> row(M);
    for (std::size_t m = 0; m < M; ++m) {
      try {
        const ProportionInterval ci = domain_interval(opt.methods[m], est, opt);
        row[m] = {true, ci.contains(truths[d]), ci.length()};
      } catch (const EmptyRegionError&) {
        row[m] = {false, false, 0.0};
      }
    }
    outcomes[r][d] = std::move(row);
  });

  summary.domains.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    DomainResult& dr = summary.domains[d];
    dr.domain_id = domains[d];
    dr.truth = truths[d];
    dr.methods.assign(M, {});
    for (std::size_t r = 0; r < opt.replicates; ++r) {
      if (!outcomes[r][d]) {
        ++dr.missing;
        continue;
      }
      for (std::size_t m = 0; m < M; ++m) {
        const Outcome& o = (*outcomes[r][d])[m];
        MethodTally& t = dr.methods[m];
        ++t.evaluated;
        if (!o.built) {
          ++t.empty_region;
          continue;
        }
        if (o.covered) ++t.covered;
        t.length_sum += o.length;
      }
    }
  }

  for (std::size_t m = 0; m < M; ++m) {
    MethodAggregate a;
    a.method = opt.methods[m].name();
    std::vector<double> cov;
    double len_sum = 0.0;
    std::size_t len_count = 0;
    double domain_len_sum = 0.0;
    std::size_t domain_count = 0;
    for (const DomainResult& dr : summary.domains) {
      const MethodTally& t = dr.methods[m];
      if (t.evaluated == 0) continue;
      cov.push_back(t.coverage());
      len_sum += t.length_sum;
      len_count += t.evaluated - t.empty_region;
      if (t.evaluated > t.empty_region) {
        domain_len_sum += t.mean_length();
        ++domain_count;
      }
    }
    a.median_coverage = median(cov);
    double total = 0.0;
    for (double c : cov) total += c;
    a.mean_coverage = cov.empty() ? 0.0 : total / static_cast<double>(cov.size());
    a.pooled_mean_length = len_count == 0 ? 0.0 : len_sum / static_cast<double>(len_count);
    a.mean_domain_length = domain_count == 0 ? 0.0 : domain_len_sum / static_cast<double>(domain_count);
    summary.aggregate.push_back(a);
  }
  return summary;
}

nlohmann::ordered_json to_json(const HarnessSummary& s) {
  nlohmann::ordered_json j;
  j["replicates"] = s.options.replicates;
  j["seed"] = s.options.seed;
  j["alpha"] = s.options.alpha;
  j["prior"] = {{"mu", s.options.prior.mu()}, {"tau2", s.options.prior.tau2()}};
  j["grid_step"] = s.options.grid_step;
  auto& methods = j["methods"] = nlohmann::ordered_json::array();
  for (const MethodSpec& m : s.options.methods) methods.push_back(m.name());
  auto& agg = j["aggregate"] = nlohmann::ordered_json::array();
  for (const MethodAggregate& a : s.aggregate) {
    agg.push_back({{"method", a.method},
                   {"median_coverage", a.median_coverage},
                   {"mean_coverage", a.mean_coverage},
                   {"mean_domain_length", a.mean_domain_length},
                   {"pooled_mean_length", a.pooled_mean_length}});
  }
  auto& doms = j["domains"] = nlohmann::ordered_json::array();
  for (const DomainResult& d : s.domains) {
    nlohmann::ordered_json dj;
    dj["domain_id"] = d.domain_id;
    dj["truth"] = d.truth;
    dj["missing_replicates"] = d.missing;
    auto& per = dj["methods"] = nlohmann::ordered_json::object();
    for (std::size_t m = 0; m < d.methods.size(); ++m) {
      const MethodTally& t = d.methods[m];
      per[s.options.methods[m].name()] = {{"evaluated", t.evaluated},
                                          {"covered", t.covered},
                                          {"empty_region", t.empty_region},
                                          {"coverage", t.coverage()},
                                          {"mean_length", t.mean_length()}};
    }
    doms.push_back(std::move(dj));
  }
  return j;
}

poststrat::PoststratTable synthetic_truth_table(const SyntheticOptions& o) {
  if (o.domains == 0) throw std::domain_error("need at least one domain");
  if (!(o.base_rate > 0.0 && o.base_rate < 1.0)) throw std::domain_error("base rate outside (0, 1)");
  std::mt19937_64 rng(derive_seed(o.seed, 0));
  std::normal_distribution<double> std_normal(0.0, 1.0);
  constexpr int kSex = 2;
  constexpr int kAge = 5;
  constexpr int kRace = 3;
  const double sex_effect = 0.2;
  std::vector<double> age(kAge);
  std::vector<double> race(kRace);
  for (double& a : age) a = o.effect_sd * std_normal(rng);
  for (double& r : race) r = o.effect_sd * std_normal(rng);
  const double intercept = logit(o.base_rate);

  std::vector<poststrat::Cell> cells;
  for (std::size_t d = 0; d < o.domains; ++d) {
    const std::string domain = "D" + std::to_string(d + 1);
    const double zip = o.domain_sd * std_normal(rng);
    const double tests = o.mean_tests * std::exp(0.9 * std_normal(rng));
    std::vector<poststrat::Cell> local;
    std::vector<double> share;
    double share_total = 0.0;
    for (int s = 0; s < kSex; ++s) {
      for (int a = 0; a < kAge; ++a) {
        for (int r = 0; r < kRace; ++r) {
          poststrat::Cell c;
          c.domain_id = domain;
          c.cell_id = "s" + std::to_string(s) + "a" + std::to_string(a) + "r" + std::to_string(r);
          c.population = std::round(std::exp(std::log(150.0) + o.population_sd * std_normal(rng))) + 1.0;
          c.pi_true = inv_logit(intercept + sex_effect * s + age[static_cast<std::size_t>(a)] +
                                race[static_cast<std::size_t>(r)] + zip);
          // Testing skews toward older age groups.
          const double w = c.population * std::exp(o.age_selection * a);
          share.push_back(w);
          share_total += w;
          local.push_back(std::move(c));
        }
      }
    }
    for (std::size_t k = 0; k < local.size(); ++k) {
      std::poisson_distribution<long long> tests_in_cell(tests * share[k] / share_total);
      local[k].n = tests_in_cell(rng);
      std::binomial_distribution<long long> positives(local[k].n, *local[k].pi_true);
      local[k].y = local[k].n > 0 ? positives(rng) : 0;
      cells.push_back(std::move(local[k]));
    }
  }
  return poststrat::PoststratTable(std::move(cells));
}

}  // namespace fabci::coverage
