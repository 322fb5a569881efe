#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "p2pgrid/errors.hpp"
#include "p2pgrid/report.hpp"

namespace p2pgrid::report {
namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double sum_values(const market::PowerByProsumer& m) {
  double sum = 0.0;
  for (const auto& [id, kw] : m) sum += kw;
  return sum;
}

std::string summary_table(const RunReport& report) {
  std::ostringstream out;
  out << "interval,start,grid_price_ckwh,transactions,traded_kw,avg_price_ckwh,"
         "seller_curtailed_kw,buyer_curtailed_kw,transaction_losses_kw,max_v_pu,min_v_pu,"
         "violations,voltage_curtailed_kw,error\n";
  for (const auto& r : report.intervals) {
    const auto& txns = r.market.transactions;
    double price_sum = 0.0;
    for (const auto& t : txns) price_sum += t.price;
    out << r.interval << ',' << r.start << ',' << format_number(r.grid_price) << ',' << txns.size() << ','
        << format_number(r.market.traded_power()) << ','
        << (txns.empty() ? std::string() : format_number(price_sum / static_cast<double>(txns.size()))) << ','
        << format_number(sum_values(r.market.seller_curtailed)) << ','
        << format_number(sum_values(r.market.buyer_curtailed)) << ',';
    if (r.feasibility) {
      const auto& f = *r.feasibility;
      double vmax = 0.0;
      double vmin = f.bus_voltages.empty() ? 0.0 : 2.0;
      for (const auto& [bus, v] : f.bus_voltages) {
        vmax = std::max(vmax, v);
        vmin = std::min(vmin, v);
      }
      double curtailed = 0.0;
      for (const auto& [bus, kw] : f.curtailment_applied) curtailed += kw;
      out << format_number(f.transaction_losses_kw) << ',' << format_number(vmax) << ','
          << format_number(vmin) << ',' << f.violations.size() << ',' << format_number(curtailed);
    } else {
      out << ",,,,";
    }
    out << ',';
    if (r.error) {
      std::string message = r.error->message;
      for (char& c : message)
        if (c == ',' || c == '\n') c = ';';
      out << message;
    }
    out << '\n';
  }
  return out.str();
}

std::optional<int> pick_voltage_interval(const RunReport& report, std::optional<int> requested) {
  if (requested) return requested;
  std::optional<int> best;
  double best_v = -1.0;
  for (const auto& r : report.intervals) {
    if (!r.feasibility) continue;
    for (const auto& [bus, v] : r.feasibility->bus_voltages) {
      if (v > best_v) {
        best_v = v;
        best = r.interval;
      }
    }
  }
  return best;
}

std::string plot_series(const RunReport& report, std::optional<int> voltage_interval) {
  std::ostringstream out;
  out << "series,x,y\n";
  for (const auto& r : report.intervals) {
    const auto& txns = r.market.transactions;
    if (txns.empty()) continue;
    double sum = 0.0;
    for (const auto& t : txns) sum += t.price;
    out << "p2p_price," << r.interval << ',' << format_number(sum / static_cast<double>(txns.size())) << '\n';
  }
  for (const auto& r : report.intervals)
    out << "grid_price," << r.interval << ',' << format_number(r.grid_price) << '\n';
  for (const auto& r : report.intervals) out << "fit," << r.interval << ',' << format_number(report.fit) << '\n';

  const auto chosen = pick_voltage_interval(report, voltage_interval);
  if (chosen) {
    for (const auto& r : report.intervals) {
      if (r.interval != *chosen || !r.feasibility) continue;
      for (const auto& [bus, v] : r.feasibility->bus_voltages)
        out << "bus_voltage_t" << r.interval << ',' << bus << ',' << format_number(v) << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

Formats parse_formats(const std::string& list) {
  Formats f{false, false, false};
  std::istringstream in(list);
  std::string kind;
  bool any = false;
  while (std::getline(in, kind, ',')) {
    if (kind == "json") f.json = true;
    else if (kind == "table") f.table = true;
    else if (kind == "plot") f.plot = true;
    else if (kind == "all") f = Formats{};
    else throw InvalidInput("unknown report format '" + kind + "' (expected json, table, plot)");
    any = true;
  }
  if (!any) throw InvalidInput("no report format selected");
  return f;
}

std::vector<std::filesystem::path> emit_reports(const RunReport& report, const std::filesystem::path& out_dir,
                                                const Formats& formats, std::optional<int> voltage_interval) {
  if (voltage_interval && std::none_of(report.intervals.begin(), report.intervals.end(),
                                       [&](const IntervalRecord& r) { return r.interval == *voltage_interval; }))
    throw InvalidInput("voltage interval " + std::to_string(*voltage_interval) + " is not in the report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  if (formats.json) {
    written.push_back(out_dir / kReportFile);
    write_file(written.back(), to_json_text(report));
  }
  if (formats.table) {
    written.push_back(out_dir / kSummaryFile);
    write_file(written.back(), summary_table(report));
  }
  if (formats.plot) {
    written.push_back(out_dir / kPlotFile);
    write_file(written.back(), plot_series(report, voltage_interval));
  }
  return written;
}

}  // namespace p2pgrid::report
