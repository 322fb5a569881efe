#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "p2pgrid/market.hpp"

namespace p2pgrid::settlement {

using market::MarketResult;
using market::ProsumerId;

// Half-open daily window [start_minute, end_minute), minutes after midnight.
struct TimeWindow {
  int start_minute = 0;
  int end_minute = 0;

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// All prices in ¢/kWh.
struct TariffSchedule {
  double fit = 11.0;
  double on_peak = 25.6;
  double off_peak = 20.3;
  std::vector<TimeWindow> peak_windows{{16 * 60, 20 * 60}};
  double interval_hours = 0.25;

  // Throws ConfigError unless fit < off_peak <= on_peak, interval_hours > 0 and
  // the peak windows lie inside one day without overlapping.
  void validate() const;

  int intervals_per_day() const;
  // Start of interval t in minutes after midnight.
  double interval_start_minute(int t) const;

  friend bool operator==(const TariffSchedule&, const TariffSchedule&) = default;
};

// Queensland retail defaults: FiT 11, off-peak 20.3, on-peak 25.6 ¢/kWh.
TariffSchedule default_tariffs();

enum class Role { Seller, Buyer };

struct SettlementRow {
  int interval = 0;
  ProsumerId participant;
  Role role = Role::Seller;
  double amount_cents = 0.0;

  friend bool operator==(const SettlementRow&, const SettlementRow&) = default;
};

struct SettlementReport {
  std::map<ProsumerId, double> seller_profit_cents;
  std::map<ProsumerId, double> buyer_savings_cents;
  std::vector<SettlementRow> breakdown;  // one row per (interval, participant, role)

  double total_seller_profit_cents() const;
  double total_buyer_savings_cents() const;

  friend bool operator==(const SettlementReport&, const SettlementReport&) = default;
};

inline double cents_to_dollars(double cents) { return cents / 100.0; }

// On-peak if the start of interval t falls in a peak window, else off-peak.
double grid_price_at(int t, const TariffSchedule& tariffs);

// Daily seller profit against FiT and buyer savings against the ToU grid price.
// Throws InvalidInput on duplicate or out-of-range interval indices.
SettlementReport settle_day(const std::vector<std::pair<int, MarketResult>>& per_interval,
                            const TariffSchedule& tariffs);

}  // namespace p2pgrid::settlement
