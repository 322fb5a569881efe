#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "p2pgrid/feasibility.hpp"
#include "p2pgrid/market.hpp"
#include "p2pgrid/scenario.hpp"
#include "p2pgrid/settlement.hpp"

namespace p2pgrid::report {

enum class ErrorKind { Input, Solver };

struct IntervalError {
  ErrorKind kind = ErrorKind::Input;
  std::string message;

  friend bool operator==(const IntervalError&, const IntervalError&) = default;
};

struct IntervalRecord {
  int interval = 0;
  std::string start;        // HH:MM
  double grid_price = 0.0;  // ¢/kWh
  market::MarketResult market;
  std::optional<feasibility::FeasibilityReport> feasibility;
  std::optional<IntervalError> error;

  friend bool operator==(const IntervalRecord&, const IntervalRecord&) = default;
};

struct RunReport {
  std::string scenario;
  double interval_hours = 0.25;
  double fit = 0.0;  // ¢/kWh, carried for plotting
  std::vector<IntervalRecord> intervals;
  settlement::SettlementReport settlement;
  bool any_voltage_violation = false;
  double total_transaction_losses_kwh = 0.0;
  bool partial = false;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct RunOptions {
  bool feasibility = true;
  unsigned threads = 1;
};

// Clears, and optionally assesses, a single interval. Errors are captured in
// the record rather than thrown.
IntervalRecord run_interval(const scenario::Scenario& sc, int t, const RunOptions& options = {});

// Assembles interval records (any order) into a report: sorts by interval,
// settles the day and computes the aggregate flags.
RunReport assemble(const scenario::Scenario& sc, std::vector<IntervalRecord> records);

RunReport run_day(const scenario::Scenario& sc, const RunOptions& options = {});

struct Formats {
  bool json = true;
  bool table = true;
  bool plot = true;
};

// Parses a comma list of json|table|plot. Throws InvalidInput on unknown kinds.
Formats parse_formats(const std::string& list);

inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kPlotFile = "plot_series.csv";

// Writes the selected files into out_dir (created if needed). The voltage
// series uses `voltage_interval`, or the interval with the highest bus voltage.
std::vector<std::filesystem::path> emit_reports(const RunReport& report,
                                                const std::filesystem::path& out_dir,
                                                const Formats& formats = {},
                                                std::optional<int> voltage_interval = std::nullopt);

std::string to_json_text(const RunReport& report);
RunReport run_report_from_json(const std::string& text);

// Fixed six-significant-digit rendering used by the tabular outputs.
std::string format_number(double value);

}  // namespace p2pgrid::report

// JSON mappings for the value types carried by reports.
namespace p2pgrid::market {
void to_json(nlohmann::json& j, const Transaction& t);
void from_json(const nlohmann::json& j, Transaction& t);
void to_json(nlohmann::json& j, const MarketResult& r);
void from_json(const nlohmann::json& j, MarketResult& r);
void to_json(nlohmann::json& j, const Offer& o);
void from_json(const nlohmann::json& j, Offer& o);
void to_json(nlohmann::json& j, const Bid& b);
void from_json(const nlohmann::json& j, Bid& b);
}  // namespace p2pgrid::market

namespace p2pgrid::settlement {
void to_json(nlohmann::json& j, const SettlementReport& r);
void from_json(const nlohmann::json& j, SettlementReport& r);
}  // namespace p2pgrid::settlement

namespace p2pgrid::feasibility {
void to_json(nlohmann::json& j, const Violation& v);
void from_json(const nlohmann::json& j, Violation& v);
void to_json(nlohmann::json& j, const AnnualizedLosses& a);
void from_json(const nlohmann::json& j, AnnualizedLosses& a);
void to_json(nlohmann::json& j, const FeasibilityReport& r);
void from_json(const nlohmann::json& j, FeasibilityReport& r);
}  // namespace p2pgrid::feasibility

namespace p2pgrid::report {
void to_json(nlohmann::json& j, const IntervalRecord& r);
void from_json(const nlohmann::json& j, IntervalRecord& r);
void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);
}  // namespace p2pgrid::report
