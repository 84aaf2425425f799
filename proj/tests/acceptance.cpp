// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   acceptance <path-to-fabci-binary> [criterion...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fabci/coverage_lab.hpp"
#include "fabci/errors.hpp"
#include "fabci/fab_engine.hpp"
#include "fabci/posterior.hpp"
#include "fabci/replicate_harness.hpp"
#include "fabci/stats_kernel.hpp"
#include "oracles.hpp"

using namespace fabci;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string range_text(const std::vector<long long>& ys) {
  if (ys.empty()) return "{}";
  std::string s = "{" + std::to_string(ys.front());
  bool contiguous = true;
  for (std::size_t i = 1; i < ys.size(); ++i) contiguous = contiguous && ys[i] == ys[i - 1] + 1;
  if (contiguous) return s + ".." + std::to_string(ys.back()) + "}";
  for (std::size_t i = 1; i < ys.size(); ++i) s += "," + std::to_string(ys[i]);
  return s + "}";
}

// 1 ------------------------------------------------------------------------

double integrated_credible_coverage(long long n) {
  const LogitNormalPrior prior(0.0, 1.0);
  const int points = 4001;
  double total = 0.0;
  double prev = 0.0;
  for (int k = 0; k < points; ++k) {
    const double theta = static_cast<double>(k) / (points - 1);
    const double c = posterior::credible_coverage(theta, n, prior, 0.05);
    if (k > 0) total += 0.5 * (prev + c) / (points - 1);
    prev = c;
  }
  return total;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double c5 = integrated_credible_coverage(5);
  const double c50 = integrated_credible_coverage(50);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = std::abs(c5 - 0.81) <= 0.02 && std::abs(c50 - 0.88) <= 0.02 && secs < 60.0;
  o.detail = "n=5 " + fmt("%.4f", c5) + " (0.81 +-0.02), n=50 " + fmt("%.4f", c50) + " (0.88 +-0.02), " +
             fmt("%.1f s", secs);
  return o;
}

// 2 ------------------------------------------------------------------------

Outcome criterion2() {
  const LogitNormalPrior prior(0.0, 1.0);
  Outcome o{true, ""};
  for (long long n : {5LL, 10LL, 20LL, 50LL}) {
    double left = -1.0;
    double right = -1.0;
    const int points = 2001;
    for (int k = 0; k < points; ++k) {
      const double theta = static_cast<double>(k) / (points - 1);
      if (posterior::credible_coverage(theta, n, prior, 0.05) >= 0.95) {
        if (left < 0.0) left = theta;
        right = theta;
      }
    }
    const bool ok = left > 0.21 && left < 0.27 && right > 0.73 && right < 0.79;
    o.pass = o.pass && ok;
    o.detail += "n=" + std::to_string(n) + " [" + fmt("%.4f", left) + ", " + fmt("%.4f", right) + "]" +
                (ok ? "" : "(out)") + " ";
  }
  o.detail += "edges in (0.21,0.27) and (0.73,0.79)";
  return o;
}

// 3 ------------------------------------------------------------------------

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const LogitNormalPrior prior(0.0, 1.0);
  struct Case {
    const char* method;
    long long lo;
    long long hi;
    long long slack;
  };
  const std::vector<Case> cases{{"wald", 3, 11, 0},
                                {"wilson", 1, 9, 0},
                                {"ac", 2, 11, 0},
                                {"fab-wald", 1, 9, 1},
                                {"fab-penalty-wald", 3, 18, 1}};
  Outcome o{true, ""};
  for (const Case& c : cases) {
    const auto method = coverage::MethodSpec::parse(c.method);
    const auto table = coverage::IntervalTable::build(100, coverage::make_provider(method, 100, prior, 0.05));
    const auto range = coverage::covering_y_range(0.05, table);
    const auto& ys = range.covering_y;
    bool contiguous = !ys.empty();
    for (std::size_t i = 1; i < ys.size(); ++i) contiguous = contiguous && ys[i] == ys[i - 1] + 1;
    const bool ok = contiguous && std::llabs(ys.front() - c.lo) <= c.slack && std::llabs(ys.back() - c.hi) <= c.slack;
    o.pass = o.pass && ok;
    o.detail += std::string(c.method) + " " + range_text(ys) + (ok ? "" : "(want " + std::to_string(c.lo) + ".." +
                                                                         std::to_string(c.hi) + ")") + "; ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 600.0;
  o.detail += fmt("%.1f s", secs);
  return o;
}

// 4 ------------------------------------------------------------------------

Outcome criterion4() {
  const LogitNormalPrior prior(0.0, 1.0);
  std::vector<double> thetas;
  for (int k = 1; k <= 99; ++k) thetas.push_back(k / 100.0);
  const std::vector<std::string> names{"wilson", "fab-wilson", "fab-penalty-wilson", "wald",
                                       "fab-wald", "ac",         "fab-penalty-ac"};
  std::vector<coverage::MethodSpec> methods;
  for (const auto& n : names) methods.push_back(coverage::MethodSpec::parse(n));
  const auto curves = coverage::coverage_curve(100, prior, methods, 0.05, thetas);
  auto cov = [&](const std::string& name, std::size_t i) {
    for (std::size_t m = 0; m < names.size(); ++m) {
      if (names[m] == name) return curves[m].points[i].coverage;
    }
    return -1.0;
  };
  double max_gap = 0.0;
  bool b = true;
  bool c = true;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double w[3] = {cov("wilson", i), cov("fab-wilson", i), cov("fab-penalty-wilson", i)};
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) max_gap = std::max(max_gap, std::abs(w[p] - w[q]));
    }
    const double t = thetas[i];
    if (t <= 0.05 + 1e-12 || t >= 0.95 - 1e-12) b = b && cov("fab-wald", i) > cov("wald", i);
    if (t <= 0.1 + 1e-12 || t >= 0.9 - 1e-12) c = c && cov("fab-penalty-ac", i) >= cov("ac", i);
  }
  Outcome o;
  o.pass = max_gap < 0.06 && b && c;
  o.detail = "(a) max Wilson-variant gap " + fmt("%.4f", max_gap) + " < 0.06; (b) fab-wald > wald in tails: " +
             (b ? "yes" : "no") + "; (c) fab-penalty-ac >= ac in tails: " + (c ? "yes" : "no");
  return o;
}

// 5 ------------------------------------------------------------------------

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_case;
  std::size_t compared = 0;
  std::size_t empty_mismatch = 0;
  std::size_t over = 0;
  for (long long n = 1; n <= 12; ++n) {
    for (int t = 0; t < 3; ++t) {
      for (int penalty = 0; penalty < 2; ++penalty) {
        oracle::BruteConfig bc;
        bc.type = static_cast<oracle::Type>(t);
        bc.penalty = penalty == 1;
        bc.n = n;
        const oracle::BruteFab brute(bc);
        fab::FabConfig fc;
        fc.type = t == 0 ? fab::IntervalType::Wald
                         : (t == 1 ? fab::IntervalType::AgrestiCoull : fab::IntervalType::Wilson);
        fc.mode = penalty == 1 ? fab::RiskMode::AllInPenalty : fab::RiskMode::Default;
        fc.n = n;
        const fab::FabIntervalBuilder builder(fc);
        for (long long y = 0; y <= n; ++y) {
          const auto [blo, bhi] = brute.interval(y);
          std::optional<ProportionInterval> ci;
          try {
            ci = builder.interval(GroupData(y, n));
          } catch (const EmptyRegionError&) {
          }
          ++compared;
          if (!ci || blo > bhi) {
            if (ci.has_value() != (blo <= bhi)) ++empty_mismatch;
            continue;
          }
          const double gap = std::max(std::abs(ci->lower - blo), std::abs(ci->upper - bhi));
          if (gap > 0.02) ++over;
          if (gap > worst) {
            worst = gap;
            worst_case = fab::to_string(fc.type) + "/" + fab::to_string(fc.mode) + " y=" + std::to_string(y) +
                         " n=" + std::to_string(n);
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = worst <= 0.02 && empty_mismatch == 0;
  o.detail = std::to_string(compared) + " intervals, max endpoint gap " + fmt("%.4f", worst) +
             (worst_case.empty() ? "" : " at " + worst_case) + ", " + std::to_string(over) +
             " over 0.02, empty-region mismatches " +
             std::to_string(empty_mismatch) + ", " + fmt("%.1f s", seconds_since(t0));
  return o;
}

// 6 ------------------------------------------------------------------------

Outcome criterion6() {
  Outcome o{true, ""};
  double worst_norm = 0.0;
  for (double mu : {-2.0, 0.0, 2.0}) {
    for (double tau2 : {0.25, 1.0, 4.0}) {
      for (long long n : {1LL, 17LL, 100LL, 500LL}) {
        const auto pmf = marginal_model(n, LogitNormalPrior(mu, tau2))->pmf();
        double s = 0.0;
        for (double p : pmf) s += p;
        worst_norm = std::max(worst_norm, std::abs(s - 1.0));
      }
    }
  }
  const bool norm_ok = worst_norm < 1e-6;

  const LogitNormalPrior p01(0.0, 1.0);
  const auto mc_y = mc_variance_y(100, p01, 1000000, 20240101);
  const double var_y = marginal_variance_y(100, p01);
  const double z_y = std::abs(var_y - mc_y.value) / mc_y.standard_error;
  const auto mc_t = mc_variance_theta(p01, 1000000, 20240102);
  const double var_t = variance_theta(p01);
  const double z_t = std::abs(var_t - mc_t.value) / mc_t.standard_error;
  const bool mc_ok = z_y < 3.0 && z_t < 3.0;

  struct Case {
    long long y;
    long long n;
    double mu;
    double tau2;
  };
  const std::vector<Case> cases{{3, 10, 0.0, 1.0}, {0, 20, -1.0, 0.5}, {50, 100, 0.0, 1.0},
                                {7, 7, 1.0, 2.0},  {2, 200, -3.5, 0.25}};
  double worst_z = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& c = cases[i];
    const auto s = posterior::posterior_summary(GroupData(c.y, c.n), LogitNormalPrior(c.mu, c.tau2), 0.05);
    const auto chain = oracle::metropolis(c.y, c.n, c.mu, c.tau2, 1000000, 777 + i);
    const double zs[4] = {std::abs(s.mean_theta - chain.theta.mean) / chain.theta.mean_se,
                          std::abs(s.sd_theta - chain.theta.sd) / chain.theta.sd_se,
                          std::abs(s.mean_logit - chain.logit.mean) / chain.logit.mean_se,
                          std::abs(s.sd_logit - chain.logit.sd) / chain.logit.sd_se};
    for (double z : zs) worst_z = std::max(worst_z, z);
  }
  const bool mcmc_ok = worst_z < 3.0;
  o.pass = norm_ok && mc_ok && mcmc_ok;
  o.detail = "normalization max |sum-1| " + fmt("%.2e", worst_norm) + " (36 cases); var(y') z " + fmt("%.2f", z_y) +
             ", var(theta) z " + fmt("%.2f", z_t) + "; posterior vs Metropolis max z " + fmt("%.2f", worst_z) +
             " (5 cases, 4 moments)";
  return o;
}

// 7 ------------------------------------------------------------------------

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto truth = coverage::synthetic_truth_table(coverage::SyntheticOptions{});
  coverage::HarnessOptions ho;
  ho.replicates = 100;
  ho.seed = 7;
  // Exchangeable prior tighter than the synthetic domain spread (sd 0.5):
  // the over-shrinkage setting under which credible intervals undercover.
  ho.prior = LogitNormalPrior(logit(0.03), 0.05);
  const auto s = coverage::replicate_harness(truth, ho);
  const double cred = s.aggregate_for("credible").median_coverage;
  const double wil = s.aggregate_for("fab-penalty-wilson").median_coverage;
  const double ac = s.aggregate_for("fab-penalty-ac").median_coverage;
  const double secs = seconds_since(t0);
  // Reported, not judged: the same run with a prior matching the synthetic
  // domain spread, where the credible interval is close to calibrated.
  coverage::HarnessOptions wide = ho;
  wide.prior = LogitNormalPrior(logit(0.03), 0.25);
  for (const char* m : {"credible", "fab-penalty-wilson", "fab-penalty-ac"}) {
    wide.methods.push_back(coverage::MethodSpec::parse(m));
  }
  const auto w = coverage::replicate_harness(truth, wide);
  Outcome o;
  o.pass = wil >= cred && ac >= wil && secs < 1800.0;
  o.detail = "median coverage with prior tau2 0.05: credible " + fmt("%.3f", cred) + ", fab-penalty-wilson " +
             fmt("%.3f", wil) + ", fab-penalty-ac " + fmt("%.3f", ac) + "; " + fmt("%.1f s", secs) +
             " [sensitivity, tau2 0.25: credible " + fmt("%.3f", w.aggregate_for("credible").median_coverage) +
             ", fab-penalty-wilson " + fmt("%.3f", w.aggregate_for("fab-penalty-wilson").median_coverage) +
             ", fab-penalty-ac " + fmt("%.3f", w.aggregate_for("fab-penalty-ac").median_coverage) + "]";
  return o;
}

// 8 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("fabci-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream table(dir / "cells.csv");
    table << "domain_id,cell_id,N,y,n,pi_true\n"
             "A,a1,120,1,40,0.03\nA,a2,300,3,90,0.04\nA,a3,80,0,0,0.05\n"
             "B,b1,500,2,150,0.02\nB,b2,250,4,60,0.05\n"
             "C,c1,90,0,0,0.03\n";
  }
  const std::string table = (dir / "cells.csv").string();
  struct Cmd {
    std::string name;
    std::string args;
  };
  const std::vector<Cmd> cmds{
      {"interval", "interval --y 5 --n 100 --type wilson --mode fab-penalty"},
      {"interval-classic", "interval --y 0 --n 100 --type wald --mode classic"},
      {"credible", "interval --y 3 --n 10 --mode credible"},
      {"coverage", "coverage --n 30 --theta-grid 11 --methods wilson,fab-ac,fab-penalty-wald,credible"},
      {"yrange", "yrange --theta 0.05 --n 100 --method fab-penalty-wald"},
      {"spending-csv", "spending --n 50 --type ac --mode all-in-penalty"},
      {"spending-json", "spending --n 50 --type wald --format json"},
      {"posterior", "posterior --y 3 --n 10 --prior-mu -1 --prior-tau2 2"},
      {"mrp", "mrp --input " + table},
      {"simulate", "simulate --synthetic-domains 4 --replicates 3 --seed 11 --methods credible,fab-penalty-wilson"},
  };
  Outcome o{true, ""};
  int identical = 0;
  for (const Cmd& c : cmds) {
    const fs::path out1 = dir / (c.name + ".1");
    const fs::path out4 = dir / (c.name + ".4");
    const fs::path replayed = dir / (c.name + ".replay");
    const fs::path manifest = dir / (c.name + ".manifest.json");
    const std::string base = cli + " " + c.args;
    const int r1 = std::system((base + " --jobs 1 --out " + out1.string() + " --manifest " + manifest.string()).c_str());
    const int r4 = std::system((base + " --jobs 4 --out " + out4.string()).c_str());
    const int rr = std::system((cli + " replay " + manifest.string() + " --jobs 3 --out " + replayed.string()).c_str());
    const std::string a = slurp(out1);
    const bool ok = r1 == 0 && r4 == 0 && rr == 0 && !a.empty() && a == slurp(out4) && a == slurp(replayed);
    if (ok) {
      ++identical;
    } else {
      o.pass = false;
      o.detail += c.name + " differs; ";
    }
  }
  fs::remove_all(dir);
  o.detail += std::to_string(identical) + "/" + std::to_string(cmds.size()) +
              " commands byte-identical across --jobs 1/4 and manifest replay";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <fabci binary> [criterion...]\n";
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"integrated credible coverage", criterion1},
      {"nominal-coverage region edges", criterion2},
      {"covering y ranges at theta = 0.05", criterion3},
      {"coverage curve shapes at n = 100", criterion4},
      {"FAB vs exhaustive oracle, n <= 12", criterion5},
      {"numerical kernel suite", criterion6},
      {"replicate harness medians", criterion7},
      {"CLI determinism and replay", [&] { return criterion8(cli); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "ACCEPTANCE " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
