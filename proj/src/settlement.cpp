#include "p2pgrid/settlement.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "p2pgrid/errors.hpp"

namespace p2pgrid::settlement {

void TariffSchedule::validate() const {
  for (double v : {fit, on_peak, off_peak, interval_hours})
    if (!std::isfinite(v)) throw ConfigError("tariff schedule has a missing or non-finite field");
  if (fit < 0.0) throw ConfigError("tariff: fit must be >= 0");
  if (!(fit < off_peak)) throw ConfigError("tariff: fit must be below the off-peak price");
  if (!(off_peak <= on_peak)) throw ConfigError("tariff: off-peak price must not exceed on-peak price");
  if (!(interval_hours > 0.0) || interval_hours > 24.0)
    throw ConfigError("tariff: interval_hours must be in (0, 24]");
  const double per_day = 24.0 / interval_hours;
  if (std::abs(per_day - std::round(per_day)) > 1e-9)
    throw ConfigError("tariff: interval_hours must divide the day evenly");

  auto windows = peak_windows;
  std::sort(windows.begin(), windows.end(),
            [](const TimeWindow& a, const TimeWindow& b) { return a.start_minute < b.start_minute; });
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.start_minute < 0 || w.end_minute > 24 * 60 || w.start_minute >= w.end_minute)
      throw ConfigError("tariff: peak window must satisfy 0 <= start < end <= 24:00");
    if (i > 0 && windows[i - 1].end_minute > w.start_minute)
      throw ConfigError("tariff: peak windows overlap");
  }
}

int TariffSchedule::intervals_per_day() const {
  return static_cast<int>(std::lround(24.0 / interval_hours));
}

double TariffSchedule::interval_start_minute(int t) const { return t * interval_hours * 60.0; }

TariffSchedule default_tariffs() { return TariffSchedule{}; }

double SettlementReport::total_seller_profit_cents() const {
  double sum = 0.0;
  for (const auto& [id, v] : seller_profit_cents) sum += v;
  return sum;
}

double SettlementReport::total_buyer_savings_cents() const {
  double sum = 0.0;
  for (const auto& [id, v] : buyer_savings_cents) sum += v;
  return sum;
}

double grid_price_at(int t, const TariffSchedule& tariffs) {
  if (t < 0 || t >= tariffs.intervals_per_day())
    throw InvalidInput("interval " + std::to_string(t) + " outside the trading day");
  const double start = tariffs.interval_start_minute(t);
  for (const auto& w : tariffs.peak_windows)
    if (start >= w.start_minute && start < w.end_minute) return tariffs.on_peak;
  return tariffs.off_peak;
}

SettlementReport settle_day(const std::vector<std::pair<int, MarketResult>>& per_interval,
                            const TariffSchedule& tariffs) {
  tariffs.validate();

  std::vector<const std::pair<int, MarketResult>*> ordered;
  std::set<int> seen;
  for (const auto& entry : per_interval) {
    if (!seen.insert(entry.first).second)
      throw InvalidInput("interval " + std::to_string(entry.first) + " settled twice");
    ordered.push_back(&entry);
  }
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->first < b->first; });

  SettlementReport report;
  for (const auto* entry : ordered) {
    const int t = entry->first;
    const double grid_price = grid_price_at(t, tariffs);

    std::map<ProsumerId, double> seller_rows;
    std::map<ProsumerId, double> buyer_rows;
    for (const auto& txn : entry->second.transactions) {
      const double energy = txn.power * tariffs.interval_hours;
      seller_rows[txn.seller] += (txn.price - tariffs.fit) * energy;
      buyer_rows[txn.buyer] += (grid_price - txn.price) * energy;
    }
    for (const auto& [id, amount] : seller_rows) {
      report.breakdown.push_back({t, id, Role::Seller, amount});
      report.seller_profit_cents[id] += amount;
    }
    for (const auto& [id, amount] : buyer_rows) {
      report.breakdown.push_back({t, id, Role::Buyer, amount});
      report.buyer_savings_cents[id] += amount;
    }
  }
  return report;
}

}  // namespace p2pgrid::settlement
