#include <algorithm>
#include <atomic>
#include <thread>

#include "p2pgrid/errors.hpp"
#include "p2pgrid/report.hpp"

namespace p2pgrid::report {

IntervalRecord run_interval(const scenario::Scenario& sc, int t, const RunOptions& options) {
  IntervalRecord record;
  record.interval = t;
  record.start = scenario::format_clock(sc.tariffs.interval_start_minute(t));
  try {
    record.grid_price = settlement::grid_price_at(t, sc.tariffs);
    auto [offers, bids] = scenario::derive_interval_market(sc.profiles, t);
    record.market = market::clear_market(std::move(offers), std::move(bids));
    if (options.feasibility)
      record.feasibility = feasibility::assess(sc.network, record.market, sc.placement(), sc.limits, sc.solver);
  } catch (const grid::NonConvergence& e) {
    record.error = IntervalError{ErrorKind::Solver, e.what()};
  } catch (const std::exception& e) {
    record.error = IntervalError{ErrorKind::Input, e.what()};
  }
  return record;
}

RunReport assemble(const scenario::Scenario& sc, std::vector<IntervalRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const IntervalRecord& a, const IntervalRecord& b) { return a.interval < b.interval; });

  RunReport report;
  report.scenario = sc.name;
  report.interval_hours = sc.tariffs.interval_hours;
  report.fit = sc.tariffs.fit;

  std::vector<std::pair<int, market::MarketResult>> settled;
  for (const auto& r : records) {
    if (r.error) report.partial = true;
    if (!r.market.transactions.empty()) settled.emplace_back(r.interval, r.market);
    if (r.feasibility) {
      if (!r.feasibility->violations.empty()) report.any_voltage_violation = true;
      report.total_transaction_losses_kwh += r.feasibility->transaction_losses_kw * report.interval_hours;
    }
  }
  report.settlement = settlement::settle_day(settled, sc.tariffs);
  report.intervals = std::move(records);
  return report;
}

RunReport run_day(const scenario::Scenario& sc, const RunOptions& options) {
  const int count = sc.intervals();
  std::vector<IntervalRecord> records(static_cast<std::size_t>(count));
  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(count)));
  if (workers == 1) {
    for (int t = 0; t < count; ++t) records[static_cast<std::size_t>(t)] = run_interval(sc, t, options);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next++; t < count; t = next++)
          records[static_cast<std::size_t>(t)] = run_interval(sc, t, options);
      });
    }
  }
  return assemble(sc, std::move(records));
}

}  // namespace p2pgrid::report
