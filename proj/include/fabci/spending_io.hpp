#pragma once

// Serialization of spending tables: CSV `theta,s` for inspection, JSON with
// the full configuration for reloading, and a directory-backed store.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "fabci/fab_engine.hpp"

namespace fabci::fab {

/// Inverses of to_string; throw std::invalid_argument on unknown names.
IntervalType parse_interval_type(const std::string& name);
RiskMode parse_risk_mode(const std::string& name);

nlohmann::ordered_json config_to_json(const FabConfig& config);
FabConfig config_from_json(const nlohmann::json& j);

void write_spending_csv(std::ostream& out, const SpendingTable& table);
/// The CSV carries no configuration, so the caller supplies it. The theta
/// column must match the configuration's grid.
SpendingTable read_spending_csv(std::istream& in, const FabConfig& config);

nlohmann::ordered_json spending_to_json(const SpendingTable& table);
SpendingTable spending_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

/// Stores tables as `spending-<fnv1a(cache_key) in hex>.json` under a
/// directory. Unreadable or mismatched files are ignored and rebuilt; writes
/// go through a temporary file and a rename.
class DirectorySpendingStore : public SpendingStore {
 public:
  explicit DirectorySpendingStore(std::filesystem::path dir);

  std::filesystem::path path_for(const FabConfig& config) const;
  std::shared_ptr<const SpendingTable> load(const FabConfig& config) override;
  void save(const SpendingTable& table) override;

 private:
  std::filesystem::path dir_;
};

}  // namespace fabci::fab
