#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "p2pgrid/feasibility.hpp"
#include "p2pgrid/grid.hpp"
#include "p2pgrid/market.hpp"
#include "p2pgrid/settlement.hpp"

namespace p2pgrid::scenario {

using grid::BusId;
using market::ProsumerId;

struct ProsumerProfile {
  ProsumerId prosumer;
  BusId bus = 0;
  double declared_price = 0.0;  // ¢/kWh
  int bcro = 1;
  std::vector<double> net_load;  // kW per interval; demand minus generation
  // Optional per-interval price overrides; empty, or one entry per interval.
  std::vector<std::optional<double>> price_override;

  double price_at(std::size_t t) const;
};

struct Scenario {
  std::string name;
  grid::ValidatedNetwork network;
  std::vector<ProsumerProfile> profiles;
  settlement::TariffSchedule tariffs;
  feasibility::VoltageLimits limits;
  grid::SolverSettings solver;

  int intervals() const { return tariffs.intervals_per_day(); }
  std::map<ProsumerId, BusId> placement() const;
};

// Network file: {"base_kva", "base_kv", "buses": [...], "branches": [...]}.
grid::NetworkModel parse_network(const std::string& text, const std::string& source = "network");
grid::NetworkModel load_network(const std::filesystem::path& path);

// Long-format profile table with header
//   interval_start,prosumer_id,net_load_kw[,price_ckwh]
// interval_start is HH:MM. Rows missing for an interval mean zero net load.
// Returns net load and optional price per prosumer id.
struct ProfileTable {
  std::map<std::string, std::vector<double>> net_load;
  std::map<std::string, std::vector<std::optional<double>>> price;
};
ProfileTable parse_profiles(const std::string& text, int interval_minutes,
                            const std::string& source = "profiles");

// Scenario file (JSON) referencing a network file and a profile table by paths
// relative to the scenario file. Fully validates cross references.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& source = "scenario");

// Negative net load sells |net load| at the declared price; positive buys.
std::pair<std::vector<market::Offer>, std::vector<market::Bid>> derive_interval_market(
    const std::vector<ProsumerProfile>& profiles, int t);

std::string format_clock(double minutes_after_midnight);
// Parses HH:MM; returns minutes after midnight or nullopt.
std::optional<int> parse_clock(const std::string& text);

}  // namespace p2pgrid::scenario
