#include "fabci/poststrat.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fabci/coverage_lab.hpp"

namespace fabci::poststrat {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::domain_error("line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
}

long long parse_count(const std::string& s, const std::string& what, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::domain_error("line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
}

}  // namespace

PoststratTable::PoststratTable(std::vector<Cell> cells) : cells_(std::move(cells)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& c = cells_[i];
    const std::string where = "cell " + c.domain_id + "/" + c.cell_id;
    if (c.domain_id.empty()) throw std::domain_error("cell without domain id");
    if (!(c.population > 0.0) || !std::isfinite(c.population)) {
      throw std::domain_error(where + ": population count must be positive");
    }
    if (c.n < 0 || c.y < 0 || c.y > c.n) throw std::domain_error(where + ": need 0 <= y <= n");
    if (c.pi_true && !(*c.pi_true >= 0.0 && *c.pi_true <= 1.0)) {
      throw std::domain_error(where + ": pi_true outside [0, 1]");
    }
    if (c.post_mean_logit.has_value() != c.post_sd_logit.has_value()) {
      throw std::domain_error(where + ": posterior mean and sd must be given together");
    }
    if (c.post_sd_logit && !(*c.post_sd_logit >= 0.0)) {
      throw std::domain_error(where + ": posterior sd must be non-negative");
    }
    if (!seen.emplace(c.domain_id, c.cell_id).second) {
      throw std::domain_error(where + ": duplicate (domain_id, cell_id)");
    }
    auto [it, fresh] = by_domain_.try_emplace(c.domain_id);
    if (fresh) domains_.push_back(c.domain_id);
    it->second.push_back(i);
  }
}

const std::vector<std::size_t>& PoststratTable::cells_of(const std::string& domain) const {
  auto it = by_domain_.find(domain);
  if (it == by_domain_.end()) throw std::domain_error("unknown domain " + domain);
  return it->second;
}

bool PoststratTable::has_truth() const noexcept {
  if (cells_.empty()) return false;
  for (const Cell& c : cells_) {
    if (!c.pi_true) return false;
  }
  return true;
}

PoststratTable read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const std::vector<std::string> header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"domain_id", "cell_id", "N", "y", "n"}) {
    if (!col.count(need)) throw std::domain_error(std::string("missing column ") + need);
  }
  auto optional_field = [&](const std::vector<std::string>& f, const char* name) -> std::optional<std::string> {
    auto it = col.find(name);
    if (it == col.end() || it->second >= f.size() || f[it->second].empty()) return std::nullopt;
    return f[it->second];
  };
  std::vector<Cell> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() < 5) throw std::domain_error("line " + std::to_string(line_no) + ": too few fields");
    Cell c;
    c.domain_id = f.at(col["domain_id"]);
    c.cell_id = f.at(col["cell_id"]);
    c.population = parse_double(f.at(col["N"]), "N", line_no);
    c.y = parse_count(f.at(col["y"]), "y", line_no);
    c.n = parse_count(f.at(col["n"]), "n", line_no);
    if (auto v = optional_field(f, "pi_true")) c.pi_true = parse_double(*v, "pi_true", line_no);
    if (auto v = optional_field(f, "post_mean_logit")) {
      c.post_mean_logit = parse_double(*v, "post_mean_logit", line_no);
    }
    if (auto v = optional_field(f, "post_sd_logit")) c.post_sd_logit = parse_double(*v, "post_sd_logit", line_no);
    cells.push_back(std::move(c));
  }
  return PoststratTable(std::move(cells));
}

void write_csv(std::ostream& out, const PoststratTable& table) {
  using coverage::format_number;
  bool truth = false;
  bool post = false;
  for (const Cell& c : table.cells()) {
    truth = truth || c.pi_true.has_value();
    post = post || c.post_mean_logit.has_value();
  }
  out << "domain_id,cell_id,N,y,n";
  if (truth) out << ",pi_true";
  if (post) out << ",post_mean_logit,post_sd_logit";
  out << '\n';
  for (const Cell& c : table.cells()) {
    out << c.domain_id << ',' << c.cell_id << ',' << format_number(c.population) << ',' << c.y << ','
        << c.n;
    if (truth) out << ',' << (c.pi_true ? format_number(*c.pi_true) : "");
    if (post) {
      out << ',' << (c.post_mean_logit ? format_number(*c.post_mean_logit) : "") << ','
          << (c.post_sd_logit ? format_number(*c.post_sd_logit) : "");
    }
    out << '\n';
  }
}

double poststratify(const PoststratTable& table, const std::map<std::string, double>& estimates,
                    const std::string& domain, CellScope scope) {
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i : table.cells_of(domain)) {
    const Cell& c = table.cells()[i];
    if (scope == CellScope::Observed && !c.observed()) continue;
    auto it = estimates.find(c.cell_id);
    if (it == estimates.end()) throw std::domain_error("no estimate for cell " + c.cell_id);
    weighted += c.population * it->second;
    total += c.population;
  }
  if (!(total > 0.0)) throw std::domain_error("domain " + domain + " has zero population weight");
  return weighted / total;
}

double true_proportion(const PoststratTable& table, const std::string& domain) {
  std::map<std::string, double> truth;
  for (std::size_t i : table.cells_of(domain)) {
    const Cell& c = table.cells()[i];
    if (!c.pi_true) throw std::domain_error("cell " + c.cell_id + " has no pi_true");
    truth[c.cell_id] = *c.pi_true;
  }
  return poststratify(table, truth, domain, CellScope::All);
}

DomainEstimate summarize_domain(const PoststratTable& table, const std::string& domain,
                                const LogitNormalPrior& prior, double alpha) {
  DomainEstimate est;
  est.domain_id = domain;
  std::map<std::string, double> sample_means;
  std::optional<std::pair<double, double>> external;
  for (std::size_t i : table.cells_of(domain)) {
    const Cell& c = table.cells()[i];
    if (c.post_mean_logit && !external) external = {*c.post_mean_logit, *c.post_sd_logit};
    if (!c.observed()) continue;
    sample_means[c.cell_id] = static_cast<double>(c.y) / static_cast<double>(c.n);
    est.n_total += c.n;
    est.y_total += c.y;
  }
  if (est.n_total == 0) throw std::domain_error("domain " + domain + " has no observed cells");
  est.poststrat_mean = poststratify(table, sample_means, domain, CellScope::Observed);
  const posterior::PosteriorSummary post =
      posterior::posterior_summary(GroupData(est.y_total, est.n_total), prior, alpha);
  est.credible = post.credible;
  if (external) {
    est.mrp_mean_logit = external->first;
    est.mrp_sd_logit = external->second;
    est.external_posterior = true;
  } else {
    est.mrp_mean_logit = post.mean_logit;
    est.mrp_sd_logit = post.sd_logit;
  }
  return est;
}

DomainSummaries domain_summaries(const PoststratTable& table, const LogitNormalPrior& prior,
                                 double alpha) {
  DomainSummaries out;
  for (const std::string& d : table.domains()) {
    bool any = false;
    for (std::size_t i : table.cells_of(d)) any = any || table.cells()[i].observed();
    if (!any) {
      out.skipped.push_back(d);
      continue;
    }
    out.estimates.push_back(summarize_domain(table, d, prior, alpha));
  }
  return out;
}

ProportionInterval domain_fab_interval(const DomainEstimate& est, fab::FabConfig config, unsigned jobs) {
  if (est.n_total < 1) throw std::domain_error("domain has no observations");
  if (!(est.mrp_sd_logit > 0.0)) {
    throw std::domain_error("degenerate prior: posterior sd of the domain logit is zero");
  }
  config.n = est.n_total;
  config.prior = LogitNormalPrior(est.mrp_mean_logit, est.mrp_sd_logit * est.mrp_sd_logit);
  const fab::FabIntervalBuilder builder(config, jobs);
  ProportionInterval ci = builder.interval_at(est.poststrat_mean);
  ci.rounded_count = std::llround(est.poststrat_mean * static_cast<double>(est.n_total));
  return ci;
}

}  // namespace fabci::poststrat
