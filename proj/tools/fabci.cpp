// fabci: command-line front end.
//
// Every command first resolves its flags into a JSON config, then runs from
// that config alone. The config is written into the run manifest, so
// `fabci replay <manifest>` re-executes the same computation and reproduces
// the output byte for byte. Execution-only settings (--jobs, --cache-dir)
// stay out of the manifest; results never depend on them.
//
// Exit codes: 0 ok, 2 usage, 3 numerical failure or empty FAB region,
// 4 I/O.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fabci/classic_intervals.hpp"
#include "fabci/coverage_lab.hpp"
#include "fabci/errors.hpp"
#include "fabci/fab_engine.hpp"
#include "fabci/parallel.hpp"
#include "fabci/posterior.hpp"
#include "fabci/poststrat.hpp"
#include "fabci/replicate_harness.hpp"
#include "fabci/spending_io.hpp"

using nlohmann::ordered_json;
using namespace fabci;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExecOptions {
  unsigned jobs = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Wall-clock stamps would break byte-identical re-runs, so a timestamp is
// only recorded when asked for or pinned through SOURCE_DATE_EPOCH.
ordered_json make_timestamp(bool wanted) {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    return utc_timestamp(static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10)));
  }
  if (wanted) return utc_timestamp(std::time(nullptr));
  return nullptr;
}

ordered_json make_manifest(const std::string& command, const ordered_json& config, const ordered_json& timestamp) {
  ordered_json m;
  m["tool"] = "fabci";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = config.contains("seed") ? config["seed"] : ordered_json(nullptr);
  m["timestamp"] = timestamp;
  return m;
}

LogitNormalPrior prior_of(const ordered_json& cfg) {
  return LogitNormalPrior(cfg.at("prior_mu").get<double>(), cfg.at("prior_tau2").get<double>());
}

std::vector<coverage::MethodSpec> methods_of(const ordered_json& cfg) {
  std::vector<coverage::MethodSpec> out;
  for (const auto& name : cfg.at("methods")) {
    try {
      out.push_back(coverage::MethodSpec::parse(name.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

ordered_json interval_json(const ProportionInterval& ci) {
  ordered_json j;
  j["method"] = to_string(ci.method);
  j["alpha"] = ci.alpha;
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  j["length"] = ci.length();
  j["center"] = ci.center;
  j["raw_lower"] = ci.raw_lower;
  j["raw_upper"] = ci.raw_upper;
  if (ci.rounded_count) j["rounded_count"] = *ci.rounded_count;
  return j;
}

ProportionInterval classic_interval(fab::IntervalType type, double theta_hat, long long n, double alpha) {
  const double nd = static_cast<double>(n);
  switch (type) {
    case fab::IntervalType::Wald: return classic::wald(theta_hat, nd, alpha);
    case fab::IntervalType::AgrestiCoull: return classic::agresti_coull_at(theta_hat, nd, alpha);
    case fab::IntervalType::Wilson: return classic::wilson(theta_hat, nd, alpha);
  }
  throw UsageError("unknown interval type");
}

fab::FabConfig fab_config(const ordered_json& cfg, fab::IntervalType type, fab::RiskMode mode, long long n,
                          const LogitNormalPrior& prior) {
  fab::FabConfig c;
  c.type = type;
  c.mode = mode;
  c.alpha = cfg.at("alpha").get<double>();
  c.n = n;
  c.prior = prior;
  c.grid_step = cfg.at("grid_step").get<double>();
  return c;
}

void emit_json(std::ostream& out, const ordered_json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Commands. Each takes the resolved config and writes the primary output.

void run_interval(const ordered_json& cfg, const ordered_json& manifest, const ExecOptions& ex, std::ostream& out) {
  const GroupData data(cfg.at("y").get<long long>(), cfg.at("n").get<long long>());
  const double alpha = cfg.at("alpha").get<double>();
  const std::string mode = cfg.at("mode");
  const fab::IntervalType type = fab::parse_interval_type(cfg.at("type"));
  std::vector<std::string> warnings;
  ProportionInterval ci;
  if (mode == "classic") {
    ci = type == fab::IntervalType::AgrestiCoull ? classic::agresti_coull(data.y, data.n, alpha)
                                                 : classic_interval(type, data.proportion(), data.n, alpha);
    if (type == fab::IntervalType::Wald && (data.y == 0 || data.y == data.n)) {
      warnings.push_back("Wald interval is degenerate at y = 0 or y = n (zero estimated variance)");
    }
  } else if (mode == "credible") {
    ci = posterior::posterior_summary(data, prior_of(cfg), alpha).credible;
  } else {
    const fab::RiskMode risk = mode == "fab" ? fab::RiskMode::Default : fab::RiskMode::AllInPenalty;
    const fab::FabConfig config = fab_config(cfg, type, risk, data.n, prior_of(cfg));
    try {
      ci = fab::FabIntervalBuilder(config, ex.jobs).interval(data);
    } catch (const EmptyRegionError& e) {
      if (cfg.at("fallback") != "classic") throw;
      ci = type == fab::IntervalType::AgrestiCoull ? classic::agresti_coull(data.y, data.n, alpha)
                                                   : classic_interval(type, data.proportion(), data.n, alpha);
      warnings.push_back(std::string("FAB region empty, classical interval returned: ") + e.what());
      std::cerr << "fabci: warning: " << warnings.back() << '\n';
    }
  }
  ordered_json j;
  j["manifest"] = manifest;
  j["interval"] = interval_json(ci);
  j["warnings"] = warnings;
  emit_json(out, j);
}

void run_coverage(const ordered_json& cfg, const ordered_json&, const ExecOptions& ex, std::ostream& out) {
  const auto methods = methods_of(cfg);
  const auto count = cfg.at("theta_grid").get<std::size_t>();
  if (count == 0) throw UsageError("--theta-grid must be at least 1");
  const auto curves =
      coverage::coverage_curve(cfg.at("n").get<long long>(), prior_of(cfg), methods, cfg.at("alpha").get<double>(),
                               coverage::theta_grid(count), cfg.at("grid_step").get<double>(), ex.jobs);
  coverage::write_coverage_csv(out, curves);
}

void run_yrange(const ordered_json& cfg, const ordered_json&, const ExecOptions& ex, std::ostream& out) {
  const auto methods = methods_of(cfg);
  if (methods.size() != 1) throw UsageError("yrange takes exactly one method");
  const long long n = cfg.at("n").get<long long>();
  const double theta = cfg.at("theta").get<double>();
  if (!(theta >= 0.0 && theta <= 1.0)) throw UsageError("--theta must lie in [0, 1]");
  const auto provider = coverage::make_provider(methods[0], n, prior_of(cfg), cfg.at("alpha").get<double>(),
                                                cfg.at("grid_step").get<double>(), ex.jobs);
  const auto table = coverage::IntervalTable::build(n, provider, ex.jobs);
  coverage::write_covering_csv(out, coverage::covering_y_range(theta, table));
}

void run_spending(const ordered_json& cfg, const ordered_json& manifest, const ExecOptions& ex, std::ostream& out) {
  const fab::FabConfig config =
      fab_config(cfg, fab::parse_interval_type(cfg.at("type")), fab::parse_risk_mode(cfg.at("mode")),
                 cfg.at("n").get<long long>(), prior_of(cfg));
  const auto table = fab::cached_spending_table(config, ex.jobs);
  if (cfg.at("format") == "csv") {
    fab::write_spending_csv(out, *table);
  } else {
    ordered_json j;
    j["manifest"] = manifest;
    j["spending"] = fab::spending_to_json(*table);
    emit_json(out, j);
  }
}

void run_posterior(const ordered_json& cfg, const ordered_json& manifest, const ExecOptions&, std::ostream& out) {
  const GroupData data(cfg.at("y").get<long long>(), cfg.at("n").get<long long>());
  const auto s = posterior::posterior_summary(data, prior_of(cfg), cfg.at("alpha").get<double>());
  ordered_json r;
  r["mean_theta"] = s.mean_theta;
  r["sd_theta"] = s.sd_theta;
  r["median_theta"] = s.median_theta;
  r["mean_logit"] = s.mean_logit;
  r["sd_logit"] = s.sd_logit;
  r["mode_logit"] = s.mode_logit;
  r["credible"] = interval_json(s.credible);
  ordered_json j;
  j["manifest"] = manifest;
  j["posterior"] = r;
  emit_json(out, j);
}

poststrat::PoststratTable load_table(const ordered_json& cfg) {
  const std::string path = cfg.at("input");
  const std::string text = read_file(path);
  if (cfg.contains("input_fnv1a") && cfg["input_fnv1a"] != hex64(fab::fnv1a(text))) {
    throw IoError("input " + path + " changed since the manifest was written");
  }
  std::istringstream in(text);
  try {
    return poststrat::read_csv(in);
  } catch (const std::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

ordered_json domain_interval_json(const coverage::MethodSpec& m, const poststrat::DomainEstimate& est,
                                  const ordered_json& cfg) {
  using F = coverage::MethodSpec::Family;
  const double alpha = cfg.at("alpha").get<double>();
  try {
    switch (m.family) {
      case F::Credible: return interval_json(*est.credible);
      case F::Classic: return interval_json(classic_interval(m.type, est.poststrat_mean, est.n_total, alpha));
      case F::Fab:
      case F::FabPenalty: {
        fab::FabConfig c = fab_config(cfg, m.type, m.family == F::Fab ? fab::RiskMode::Default
                                                                     : fab::RiskMode::AllInPenalty,
                                      est.n_total, LogitNormalPrior(0.0, 1.0));
        return interval_json(poststrat::domain_fab_interval(est, c));
      }
    }
  } catch (const EmptyRegionError& e) {
    if (cfg.at("fallback") == "classic") {
      ordered_json j = interval_json(classic_interval(m.type, est.poststrat_mean, est.n_total, alpha));
      j["warning"] = std::string("FAB region empty, classical interval returned: ") + e.what();
      return j;
    }
    return {{"error", "empty-region"}, {"message", e.what()}};
  } catch (const std::domain_error& e) {
    return {{"error", "domain"}, {"message", e.what()}};
  }
  return nullptr;
}

void run_mrp(const ordered_json& cfg, const ordered_json& manifest, const ExecOptions& ex, std::ostream& out) {
  const auto table = load_table(cfg);
  const auto methods = methods_of(cfg);
  const auto summaries = poststrat::domain_summaries(table, prior_of(cfg), cfg.at("alpha").get<double>());
  std::vector<ordered_json> rows(summaries.estimates.size());
  parallel_for(rows.size(), ex.jobs, [&](std::size_t i) {
    const auto& est = summaries.estimates[i];
    ordered_json d;
    d["domain_id"] = est.domain_id;
    d["poststrat_mean"] = est.poststrat_mean;
    d["n_total"] = est.n_total;
    d["y_total"] = est.y_total;
    d["mrp_mean_logit"] = est.mrp_mean_logit;
    d["mrp_sd_logit"] = est.mrp_sd_logit;
    d["external_posterior"] = est.external_posterior;
    if (table.has_truth()) d["true_proportion"] = poststrat::true_proportion(table, est.domain_id);
    ordered_json intervals = ordered_json::object();
    for (const auto& m : methods) intervals[m.name()] = domain_interval_json(m, est, cfg);
    d["intervals"] = std::move(intervals);
    rows[i] = std::move(d);
  });
  ordered_json j;
  j["manifest"] = manifest;
  j["domains"] = rows;
  j["skipped_domains"] = summaries.skipped;
  emit_json(out, j);
}

void run_simulate(const ordered_json& cfg, const ordered_json& manifest, const ExecOptions& ex, std::ostream& out) {
  std::optional<poststrat::PoststratTable> truth;
  if (cfg.contains("input")) {
    truth = load_table(cfg);
  } else {
    coverage::SyntheticOptions so;
    so.domains = cfg.at("synthetic_domains").get<std::size_t>();
    so.seed = cfg.at("table_seed").get<std::uint64_t>();
    truth = coverage::synthetic_truth_table(so);
  }
  coverage::HarnessOptions ho;
  ho.replicates = cfg.at("replicates").get<std::size_t>();
  ho.seed = cfg.at("seed").get<std::uint64_t>();
  ho.prior = prior_of(cfg);
  ho.alpha = cfg.at("alpha").get<double>();
  ho.methods = methods_of(cfg);
  ho.grid_step = cfg.at("grid_step").get<double>();
  ho.jobs = ex.jobs;
  ordered_json j;
  j["manifest"] = manifest;
  j["summary"] = coverage::to_json(coverage::replicate_harness(*truth, ho));
  emit_json(out, j);
}

using Runner = void (*)(const ordered_json&, const ordered_json&, const ExecOptions&, std::ostream&);

Runner runner_for(const std::string& command) {
  if (command == "interval") return run_interval;
  if (command == "coverage") return run_coverage;
  if (command == "yrange") return run_yrange;
  if (command == "spending") return run_spending;
  if (command == "posterior") return run_posterior;
  if (command == "mrp") return run_mrp;
  if (command == "simulate") return run_simulate;
  throw UsageError("unknown command '" + command + "' in manifest");
}

void execute(const ordered_json& manifest, const ExecOptions& ex, const std::string& out_path,
             const std::string& manifest_path) {
  const Runner run = runner_for(manifest.at("command"));
  std::ostringstream buffer;
  run(manifest.at("config"), manifest, ex, buffer);
  if (out_path.empty() || out_path == "-") {
    std::cout << buffer.str() << std::flush;
    if (!std::cout) throw IoError("cannot write to stdout");
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << buffer.str();
    if (!f) throw IoError("cannot write " + out_path);
  }
  if (!manifest_path.empty()) {
    std::ofstream f(manifest_path, std::ios::binary);
    f << manifest.dump(2) << '\n';
    if (!f) throw IoError("cannot write " + manifest_path);
  }
}

// Either a bare manifest or a JSON output carrying one.
ordered_json load_manifest(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const ordered_json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  if (j.contains("manifest")) j = j["manifest"];
  if (!j.contains("command") || !j.contains("config")) throw UsageError(path + " is not a fabci manifest");
  if (j.value("tool", "") != "fabci") throw UsageError(path + " was not written by fabci");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FAB confidence intervals for binomial proportions"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  unsigned jobs = 1;
  std::string cache_dir;
  bool timestamp = false;
  std::string out_path;
  std::string manifest_path;
  app.add_option("--jobs", jobs, "Worker threads (0: all cores)")->envname("FABCI_JOBS");
  app.add_option("--cache-dir", cache_dir, "Directory for persisted spending tables")->envname("FABCI_CACHE_DIR");
  app.add_flag("--timestamp", timestamp, "Record the wall-clock time in the manifest");

  // Flag storage shared by the subcommands; each resolves only what it uses.
  long long y = 0;
  long long n = 0;
  double alpha = 0.05;
  std::string type = "wilson";
  std::string mode = "fab";
  double prior_mu = 0.0;
  double prior_tau2 = 1.0;
  double grid_step = 0.01;
  std::uint64_t seed = 1;
  std::string fallback = "none";
  std::vector<std::string> methods;
  std::size_t theta_grid = 201;
  double theta = 0.0;
  std::string format = "csv";
  std::string input;
  std::size_t replicates = 100;
  std::size_t synthetic_domains = 30;
  std::uint64_t table_seed = 2024;
  std::string replay_path;

  const auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_path, "Output file (default stdout)");
    c->add_option("--manifest", manifest_path, "Also write the run manifest to this file");
  };
  const auto add_prior = [&](CLI::App* c) {
    c->add_option("--prior-mu", prior_mu, "Prior mean of logit(theta)")->capture_default_str();
    c->add_option("--prior-tau2", prior_tau2, "Prior variance of logit(theta)")->capture_default_str();
  };
  const auto add_alpha = [&](CLI::App* c) {
    c->add_option("--alpha", alpha, "Error rate")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  };
  const auto add_grid = [&](CLI::App* c) {
    c->add_option("--grid-step", grid_step, "Theta grid step of the FAB engine")->capture_default_str();
  };
  const std::vector<std::string> types{"wald", "ac", "wilson"};

  auto* interval = app.add_subcommand("interval", "One interval for y successes out of n");
  interval->add_option("--y", y, "Successes")->required();
  interval->add_option("--n", n, "Trials")->required();
  add_alpha(interval);
  interval->add_option("--type", type, "wald, ac or wilson")->capture_default_str()->check(CLI::IsMember(types));
  interval->add_option("--mode", mode, "classic, fab, fab-penalty or credible")
      ->capture_default_str()
      ->check(CLI::IsMember({"classic", "fab", "fab-penalty", "credible"}));
  add_prior(interval);
  add_grid(interval);
  interval->add_option("--seed", seed, "Recorded in the manifest")->capture_default_str();
  interval->add_option("--fallback", fallback, "none or classic")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "classic"}));
  add_out(interval);

  auto* cov = app.add_subcommand("coverage", "Exact coverage curves (CSV)");
  cov->add_option("--n", n, "Trials")->required();
  add_alpha(cov);
  add_prior(cov);
  cov->add_option("--methods", methods, "Comma-separated method names")->delimiter(',');
  cov->add_option("--theta-grid", theta_grid, "Number of theta points on [0, 1]")->capture_default_str();
  add_grid(cov);
  add_out(cov);

  auto* yr = app.add_subcommand("yrange", "Outcomes whose interval covers theta (CSV)");
  yr->add_option("--theta", theta, "True proportion")->required();
  yr->add_option("--n", n, "Trials")->required();
  yr->add_option("--method", methods, "Method name")->required();
  add_alpha(yr);
  add_prior(yr);
  add_grid(yr);
  add_out(yr);

  auto* sp = app.add_subcommand("spending", "Spending table s(theta)");
  sp->add_option("--n", n, "Trials")->required();
  add_alpha(sp);
  sp->add_option("--type", type, "wald, ac or wilson")->capture_default_str()->check(CLI::IsMember(types));
  std::string risk_mode = "default";
  sp->add_option("--mode", risk_mode, "default or all-in-penalty")
      ->capture_default_str()
      ->check(CLI::IsMember({"default", "all-in-penalty"}));
  add_prior(sp);
  add_grid(sp);
  sp->add_option("--format", format, "csv or json")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  add_out(sp);

  auto* post = app.add_subcommand("posterior", "Posterior summary of theta (JSON)");
  post->add_option("--y", y, "Successes")->required();
  post->add_option("--n", n, "Trials")->required();
  add_alpha(post);
  add_prior(post);
  add_out(post);

  auto* mrp = app.add_subcommand("mrp", "Domain intervals from a poststratification table (JSON)");
  mrp->add_option("--input", input, "CSV domain_id,cell_id,N,y,n[,pi_true][,post_mean_logit,post_sd_logit]")
      ->required();
  add_alpha(mrp);
  add_prior(mrp);
  mrp->add_option("--methods", methods, "Comma-separated method names")->delimiter(',');
  add_grid(mrp);
  mrp->add_option("--fallback", fallback, "none or classic")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "classic"}));
  add_out(mrp);

  auto* sim = app.add_subcommand("simulate", "Bootstrap replicate harness (JSON)");
  sim->add_option("--input", input, "Truth table CSV with pi_true (default: synthetic table)");
  sim->add_option("--synthetic-domains", synthetic_domains, "Domains in the synthetic table")->capture_default_str();
  sim->add_option("--table-seed", table_seed, "Seed of the synthetic table")->capture_default_str();
  sim->add_option("--replicates", replicates, "Bootstrap replicates")->capture_default_str();
  sim->add_option("--seed", seed, "Replicate seed")->capture_default_str();
  add_alpha(sim);
  add_prior(sim);
  sim->add_option("--methods", methods, "Comma-separated method names")->delimiter(',');
  add_grid(sim);
  add_out(sim);

  auto* replay = app.add_subcommand("replay", "Re-run a manifest (bare or embedded in a JSON output)");
  replay->add_option("manifest", replay_path, "Manifest or JSON output file")->required();
  replay->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExecOptions ex;
    ex.jobs = jobs == 0 ? default_jobs() : jobs;
    if (!cache_dir.empty()) {
      try {
        fab::set_spending_store(std::make_shared<fab::DirectorySpendingStore>(cache_dir));
      } catch (const std::exception& e) {
        throw IoError(std::string("cache dir: ") + e.what());
      }
    }

    if (replay->parsed()) {
      const ordered_json manifest = load_manifest(replay_path);
      execute(manifest, ex, out_path, "");
      return 0;
    }

    ordered_json cfg;
    std::string command;
    const auto prior_cfg = [&] {
      cfg["prior_mu"] = prior_mu;
      cfg["prior_tau2"] = prior_tau2;
    };
    const auto method_list = [&](std::vector<coverage::MethodSpec> fallback_methods) {
      std::vector<coverage::MethodSpec> parsed;
      for (const auto& name : methods) {
        try {
          parsed.push_back(coverage::MethodSpec::parse(name));
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      if (parsed.empty()) parsed = std::move(fallback_methods);
      ordered_json names = ordered_json::array();
      for (const auto& m : parsed) names.push_back(m.name());
      return names;
    };

    if (interval->parsed()) {
      command = "interval";
      cfg["y"] = y;
      cfg["n"] = n;
      cfg["alpha"] = alpha;
      cfg["type"] = type;
      cfg["mode"] = mode;
      prior_cfg();
      cfg["grid_step"] = grid_step;
      cfg["seed"] = seed;
      cfg["fallback"] = fallback;
    } else if (cov->parsed()) {
      command = "coverage";
      cfg["n"] = n;
      cfg["alpha"] = alpha;
      prior_cfg();
      cfg["methods"] = method_list(coverage::nine_methods());
      cfg["theta_grid"] = theta_grid;
      cfg["grid_step"] = grid_step;
    } else if (yr->parsed()) {
      command = "yrange";
      cfg["theta"] = theta;
      cfg["n"] = n;
      cfg["alpha"] = alpha;
      prior_cfg();
      cfg["methods"] = method_list({});
      cfg["grid_step"] = grid_step;
    } else if (sp->parsed()) {
      command = "spending";
      cfg["n"] = n;
      cfg["alpha"] = alpha;
      cfg["type"] = type;
      cfg["mode"] = risk_mode;
      prior_cfg();
      cfg["grid_step"] = grid_step;
      cfg["format"] = format;
    } else if (post->parsed()) {
      command = "posterior";
      cfg["y"] = y;
      cfg["n"] = n;
      cfg["alpha"] = alpha;
      prior_cfg();
    } else if (mrp->parsed()) {
      command = "mrp";
      cfg["input"] = input;
      cfg["input_fnv1a"] = hex64(fab::fnv1a(read_file(input)));
      cfg["alpha"] = alpha;
      prior_cfg();
      cfg["methods"] = method_list(coverage::harness_default_methods());
      cfg["grid_step"] = grid_step;
      cfg["fallback"] = fallback;
    } else if (sim->parsed()) {
      command = "simulate";
      if (!input.empty()) {
        cfg["input"] = input;
        cfg["input_fnv1a"] = hex64(fab::fnv1a(read_file(input)));
      } else {
        cfg["synthetic_domains"] = synthetic_domains;
        cfg["table_seed"] = table_seed;
      }
      cfg["replicates"] = replicates;
      cfg["seed"] = seed;
      cfg["alpha"] = alpha;
      prior_cfg();
      cfg["methods"] = method_list(coverage::harness_default_methods());
      cfg["grid_step"] = grid_step;
    }
    execute(make_manifest(command, cfg, make_timestamp(timestamp)), ex, out_path, manifest_path);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "fabci: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "fabci: " << e.what() << '\n';
    return 4;
  } catch (const EmptyRegionError& e) {
    std::cerr << "fabci: empty FAB region: " << e.what() << " (use --fallback classic)\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "fabci: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "fabci: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fabci: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fabci: malformed manifest: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fabci: " << e.what() << '\n';
    return 3;
  }
}
