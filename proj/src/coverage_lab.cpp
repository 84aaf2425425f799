#include "fabci/coverage_lab.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "fabci/classic_intervals.hpp"
#include "fabci/errors.hpp"
#include "fabci/parallel.hpp"
#include "fabci/posterior.hpp"

namespace fabci::coverage {

std::string MethodSpec::name() const {
  switch (family) {
    case Family::Classic: return fab::to_string(type);
    case Family::Fab: return "fab-" + fab::to_string(type);
    case Family::FabPenalty: return "fab-penalty-" + fab::to_string(type);
    case Family::Credible: return "credible";
  }
  return "unknown";
}

MethodSpec MethodSpec::parse(const std::string& name) {
  if (name == "credible") return {Family::Credible, fab::IntervalType::Wilson};
  auto type_of = [&](const std::string& t) {
    if (t == "wald") return fab::IntervalType::Wald;
    if (t == "ac") return fab::IntervalType::AgrestiCoull;
    if (t == "wilson") return fab::IntervalType::Wilson;
    throw std::invalid_argument("unknown interval method: " + name);
  };
  const std::string penalty = "fab-penalty-";
  const std::string fab = "fab-";
  if (name.rfind(penalty, 0) == 0) return {Family::FabPenalty, type_of(name.substr(penalty.size()))};
  if (name.rfind(fab, 0) == 0) return {Family::Fab, type_of(name.substr(fab.size()))};
  return {Family::Classic, type_of(name)};
}

std::vector<MethodSpec> nine_methods() {
  std::vector<MethodSpec> out;
  for (auto type : {fab::IntervalType::Wilson, fab::IntervalType::Wald, fab::IntervalType::AgrestiCoull}) {
    for (auto family : {MethodSpec::Family::Classic, MethodSpec::Family::Fab, MethodSpec::Family::FabPenalty}) {
      out.push_back({family, type});
    }
  }
  return out;
}

IntervalProvider make_provider(const MethodSpec& method, long long n, const LogitNormalPrior& prior,
                               double alpha, double grid_step, unsigned jobs) {
  using Family = MethodSpec::Family;
  switch (method.family) {
    case Family::Classic:
      return [type = method.type, alpha](const GroupData& g) {
        switch (type) {
          case fab::IntervalType::Wald: return classic::wald(g.proportion(), static_cast<double>(g.n), alpha);
          case fab::IntervalType::AgrestiCoull: return classic::agresti_coull(g.y, g.n, alpha);
          case fab::IntervalType::Wilson: break;
        }
        return classic::wilson(g.proportion(), static_cast<double>(g.n), alpha);
      };
    case Family::Credible: {
      auto table = posterior::credible_table(n, prior, alpha);
      return [table](const GroupData& g) { return table->at(g.y); };
    }
    case Family::Fab:
    case Family::FabPenalty: {
      fab::FabConfig config;
      config.type = method.type;
      config.mode = method.family == Family::Fab ? fab::RiskMode::Default : fab::RiskMode::AllInPenalty;
      config.alpha = alpha;
      config.n = n;
      config.prior = prior;
      config.grid_step = grid_step;
      auto builder = std::make_shared<const fab::FabIntervalBuilder>(config, jobs);
      return [builder](const GroupData& g) { return builder->interval(g); };
    }
  }
  throw std::invalid_argument("unknown method family");
}

IntervalTable IntervalTable::build(long long n, const IntervalProvider& provider, unsigned jobs) {
  if (n < 1) throw std::domain_error("interval table needs n >= 1");
  IntervalTable t;
  t.n_ = n;
  t.intervals_.resize(static_cast<std::size_t>(n + 1));
  parallel_for(static_cast<std::size_t>(n + 1), jobs, [&](std::size_t y) {
    try {
      t.intervals_[y] = provider(GroupData(static_cast<long long>(y), n));
    } catch (const EmptyRegionError&) {
      t.intervals_[y].reset();
    }
  });
  for (long long y = 0; y <= n; ++y) {
    if (!t.intervals_[static_cast<std::size_t>(y)]) t.empty_.push_back(y);
  }
  return t;
}

CoveragePoint coverage_at(double theta, const IntervalTable& table) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  CoveragePoint p;
  p.theta = theta;
  for (long long y = 0; y <= table.n(); ++y) {
    const auto& ci = table.at(y);
    if (!ci) {
      ++p.empty_region;
      continue;
    }
    const double w = binom_pmf(y, table.n(), theta);
    if (ci->contains(theta)) p.coverage += w;
    p.mean_length += w * ci->length();
  }
  return p;
}

CoveragePoint coverage_at(double theta, long long n, const MethodSpec& method,
                          const LogitNormalPrior& prior, double alpha) {
  return coverage_at(theta, IntervalTable::build(n, make_provider(method, n, prior, alpha)));
}

CoveringRange covering_y_range(double theta, const IntervalTable& table) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::domain_error("theta outside [0, 1]");
  CoveringRange r;
  r.theta = theta;
  r.pmf.reserve(static_cast<std::size_t>(table.n() + 1));
  for (long long y = 0; y <= table.n(); ++y) {
    r.pmf.push_back(binom_pmf(y, table.n(), theta));
    const auto& ci = table.at(y);
    if (ci && ci->contains(theta)) r.covering_y.push_back(y);
  }
  return r;
}

std::vector<double> theta_grid(std::size_t count) {
  if (count == 0) throw std::domain_error("theta grid needs at least one point");
  if (count == 1) return {0.5};
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) g[k] = static_cast<double>(k) / static_cast<double>(count - 1);
  return g;
}

std::vector<CoverageCurve> coverage_curve(long long n, const LogitNormalPrior& prior,
                                          const std::vector<MethodSpec>& methods, double alpha,
                                          const std::vector<double>& thetas, double grid_step,
                                          unsigned jobs) {
  std::vector<CoverageCurve> curves;
  curves.reserve(methods.size());
  for (const MethodSpec& m : methods) {
    const IntervalTable table =
        IntervalTable::build(n, make_provider(m, n, prior, alpha, grid_step, jobs), jobs);
    CoverageCurve c{m, std::vector<CoveragePoint>(thetas.size())};
    parallel_for(thetas.size(), jobs, [&](std::size_t k) { c.points[k] = coverage_at(thetas[k], table); });
    curves.push_back(std::move(c));
  }
  return curves;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_coverage_csv(std::ostream& out, const std::vector<CoverageCurve>& curves) {
  out << "method,theta,coverage,mean_length\n";
  for (const CoverageCurve& c : curves) {
    const std::string name = c.method.name();
    for (const CoveragePoint& p : c.points) {
      out << name << ',' << format_number(p.theta) << ',' << format_number(p.coverage) << ','
          << format_number(p.mean_length) << '\n';
    }
  }
}

void write_covering_csv(std::ostream& out, const CoveringRange& range) {
  out << "theta,y,pmf,covered\n";
  std::size_t next = 0;
  for (std::size_t y = 0; y < range.pmf.size(); ++y) {
    bool covered = false;
    if (next < range.covering_y.size() && range.covering_y[next] == static_cast<long long>(y)) {
      covered = true;
      ++next;
    }
    out << format_number(range.theta) << ',' << y << ',' << format_number(range.pmf[y]) << ','
        << (covered ? 1 : 0) << '\n';
  }
}

}  // namespace fabci::coverage
