#include "fabci/spending_io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "fabci/coverage_lab.hpp"

namespace fabci::fab {

IntervalType parse_interval_type(const std::string& name) {
  if (name == "wald") return IntervalType::Wald;
  if (name == "ac") return IntervalType::AgrestiCoull;
  if (name == "wilson") return IntervalType::Wilson;
  throw std::invalid_argument("unknown interval type '" + name + "' (wald, ac, wilson)");
}

RiskMode parse_risk_mode(const std::string& name) {
  if (name == "default") return RiskMode::Default;
  if (name == "all-in-penalty") return RiskMode::AllInPenalty;
  throw std::invalid_argument("unknown risk mode '" + name + "' (default, all-in-penalty)");
}

nlohmann::ordered_json config_to_json(const FabConfig& c) {
  return {{"type", to_string(c.type)},
          {"mode", to_string(c.mode)},
          {"alpha", c.alpha},
          {"n", c.n},
          {"prior_mu", c.prior.mu()},
          {"prior_tau2", c.prior.tau2()},
          {"grid_step", c.grid_step},
          {"bisection_iters", c.bisection_iters}};
}

FabConfig config_from_json(const nlohmann::json& j) {
  FabConfig c;
  c.type = parse_interval_type(j.at("type").get<std::string>());
  c.mode = parse_risk_mode(j.at("mode").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.n = j.at("n").get<long long>();
  c.prior = LogitNormalPrior(j.at("prior_mu").get<double>(), j.at("prior_tau2").get<double>());
  c.grid_step = j.at("grid_step").get<double>();
  c.bisection_iters = j.value("bisection_iters", c.bisection_iters);
  c.validate();
  return c;
}

void write_spending_csv(std::ostream& out, const SpendingTable& table) {
  out << "theta,s\n";
  for (const SpendingEntry& e : table.grid) {
    out << coverage::format_number(e.theta) << ',' << coverage::format_number(e.s) << '\n';
  }
}

SpendingTable read_spending_csv(std::istream& in, const FabConfig& config) {
  config.validate();
  SpendingTable table;
  table.config = config;
  std::string line;
  if (!std::getline(in, line)) throw std::domain_error("empty spending CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "theta,s") throw std::domain_error("spending CSV must start with 'theta,s'");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string theta;
    std::string s;
    if (!std::getline(row, theta, ',') || !std::getline(row, s)) {
      throw std::domain_error("malformed spending row '" + line + "'");
    }
    table.grid.push_back({std::stod(theta), std::stod(s)});
  }
  const std::size_t points = config.grid_intervals() + 1;
  if (table.grid.size() != points) throw std::domain_error("spending CSV has the wrong number of rows");
  for (std::size_t k = 0; k < points; ++k) {
    if (std::abs(table.grid[k].theta - config.grid_theta(k)) > 1e-12) {
      throw std::domain_error("spending CSV theta column does not match the grid");
    }
    table.grid[k].theta = config.grid_theta(k);
  }
  return table;
}

nlohmann::ordered_json spending_to_json(const SpendingTable& table) {
  // ordered_json keeps keys in a vector, so build the arrays before inserting
  auto theta = nlohmann::ordered_json::array();
  auto s = nlohmann::ordered_json::array();
  for (const SpendingEntry& e : table.grid) {
    theta.push_back(e.theta);
    s.push_back(e.s);
  }
  nlohmann::ordered_json j;
  j["config"] = config_to_json(table.config);
  j["theta"] = std::move(theta);
  j["s"] = std::move(s);
  return j;
}

SpendingTable spending_from_json(const nlohmann::json& j) {
  SpendingTable table;
  table.config = config_from_json(j.at("config"));
  const auto& theta = j.at("theta");
  const auto& s = j.at("s");
  if (theta.size() != s.size()) throw std::domain_error("spending JSON: theta and s lengths differ");
  if (theta.size() != table.config.grid_intervals() + 1) {
    throw std::domain_error("spending JSON has the wrong number of grid points");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    table.grid.push_back({theta[k].get<double>(), s[k].get<double>()});
  }
  return table;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

DirectorySpendingStore::DirectorySpendingStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path DirectorySpendingStore::path_for(const FabConfig& config) const {
  char name[48];
  std::snprintf(name, sizeof name, "spending-%016llx.json",
                static_cast<unsigned long long>(fnv1a(config.cache_key())));
  return dir_ / name;
}

std::shared_ptr<const SpendingTable> DirectorySpendingStore::load(const FabConfig& config) {
  std::ifstream in(path_for(config));
  if (!in) return nullptr;
  try {
    auto table = std::make_shared<SpendingTable>(spending_from_json(nlohmann::json::parse(in)));
    if (table->config.cache_key() != config.cache_key()) return nullptr;  // hash collision
    return table;
  } catch (const std::exception&) {
    return nullptr;
  }
}

void DirectorySpendingStore::save(const SpendingTable& table) {
  static std::atomic<unsigned long long> counter{0};
  static const unsigned long long process_tag = std::random_device{}();
  const std::filesystem::path target = path_for(table.config);
  std::filesystem::path tmp = target;
  tmp += ".tmp" + std::to_string(process_tag) + "-" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write spending cache file " + tmp.string());
    out << spending_to_json(table).dump() << '\n';
    if (!out) throw std::runtime_error("cannot write spending cache file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot install spending cache file " + target.string());
  }
}

}  // namespace fabci::fab
