#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "p2pgrid/errors.hpp"
#include "p2pgrid/feasibility.hpp"
#include "p2pgrid/report.hpp"
#include "p2pgrid/scenario.hpp"

namespace p2pgrid::cli {
namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double to_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput(what + ": '" + text + "' is not a number");
  }
}

int to_int(const std::string& text, const std::string& what) {
  const double v = to_number(text, what);
  if (v != static_cast<int>(v)) throw InvalidInput(what + ": '" + text + "' is not an integer");
  return static_cast<int>(v);
}

// ID:PRICE:KW:BCRO
template <typename Order>
Order parse_order(const std::string& spec, const char* flag) {
  const auto parts = split(spec, ':');
  if (parts.size() != 4 || parts[0].empty())
    throw InvalidInput(std::string(flag) + " expects ID:PRICE:KW:BCRO, got '" + spec + "'");
  return Order{market::ProsumerId(parts[0]), to_number(parts[1], flag), to_number(parts[2], flag),
               to_int(parts[3], flag)};
}

feasibility::VoltageLimits parse_limits(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw InvalidInput("--limits expects LOWER,UPPER");
  feasibility::VoltageLimits limits{to_number(parts[0], "--limits"), to_number(parts[1], "--limits")};
  limits.validate();
  return limits;
}

std::string dollars(double cents) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "$%.2f", settlement::cents_to_dollars(cents));
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!(out << text)) throw std::runtime_error("cannot write " + path.string());
}

void print_market(const market::MarketResult& result, std::ostream& out) {
  out << "k,seller,buyer,power_kw,price_ckwh\n";
  for (const auto& t : result.transactions)
    out << t.index << ',' << t.seller.str() << ',' << t.buyer.str() << ',' << report::format_number(t.power)
        << ',' << report::format_number(t.price) << '\n';
  for (const auto& [id, p] : result.avg_seller_price)
    out << "avg seller price " << id.str() << ": " << report::format_number(p) << " c/kWh\n";
  for (const auto& [id, p] : result.avg_buyer_price)
    out << "avg buyer price " << id.str() << ": " << report::format_number(p) << " c/kWh\n";
  for (const auto& [id, kw] : result.seller_curtailed)
    out << "curtailed seller " << id.str() << ": " << report::format_number(kw) << " kW\n";
  for (const auto& [id, kw] : result.buyer_curtailed)
    out << "curtailed buyer " << id.str() << ": " << report::format_number(kw) << " kW\n";
}

void print_feasibility(const feasibility::FeasibilityReport& f, std::ostream& out) {
  out << "P_g case I:  " << report::format_number(f.p_g_case1) << " kW\n"
      << "P_g case II: " << report::format_number(f.p_g_case2) << " kW\n"
      << "transaction losses: " << report::format_number(f.transaction_losses_kw) << " kW\n";
  for (const auto& v : f.violations)
    out << "violation bus " << v.bus << ": " << report::format_number(v.v_mag) << " pu ("
        << (v.limit == feasibility::LimitKind::Upper ? "upper" : "lower") << ")\n";
  for (const auto& [bus, kw] : f.curtailment_applied)
    out << "curtailed bus " << bus << ": " << report::format_number(kw) << " kW\n";
  if (!f.curtailment_resolved) out << "curtailment could not clear all over-voltages\n";
  if (f.annualized) {
    const auto& a = *f.annualized;
    out << "annualized: " << report::format_number(a.cumulative_mw()) << " MW cumulative, "
        << report::format_number(a.energy_mwh) << " MWh, $" << report::format_number(a.cost_low_usd)
        << "-$" << report::format_number(a.cost_high_usd) << '\n';
  }
}

struct Common {
  std::string scenario;
  std::string out_dir;
  std::string limits;
  double tolerance = 0.0;
  std::string formats = "json,table,plot";
  bool no_feasibility = false;
};

void apply_overrides(scenario::Scenario& sc, const Common& c) {
  if (!c.limits.empty()) sc.limits = parse_limits(c.limits);
  if (c.tolerance != 0.0) sc.solver = grid::solver_settings(c.tolerance, sc.solver.max_iterations);
}

int cmd_clear(const Common& c, const std::vector<std::string>& offer_specs,
              const std::vector<std::string>& bid_specs, const std::string& file, const std::string& interval,
              std::ostream& out) {
  std::vector<market::Offer> offers;
  std::vector<market::Bid> bids;
  if (!file.empty()) {
    json j;
    try {
      j = json::parse(read_text(file));
      offers = j.value("offers", json::array()).get<std::vector<market::Offer>>();
      bids = j.value("bids", json::array()).get<std::vector<market::Bid>>();
    } catch (const json::exception& e) {
      throw ParseError(file, 0, "", e.what());
    }
  }
  if (!c.scenario.empty()) {
    if (interval.empty()) throw InvalidInput("clear --scenario needs --interval HH:MM");
    const auto sc = scenario::load_scenario(c.scenario);
    const auto minute = scenario::parse_clock(interval);
    const double per = sc.tariffs.interval_hours * 60.0;
    if (!minute || std::fmod(*minute, per) != 0.0 || *minute >= 24 * 60)
      throw InvalidInput("--interval '" + interval + "' is not an interval start");
    auto [o, b] = scenario::derive_interval_market(sc.profiles, static_cast<int>(*minute / per));
    offers.insert(offers.end(), o.begin(), o.end());
    bids.insert(bids.end(), b.begin(), b.end());
  }
  for (const auto& s : offer_specs) offers.push_back(parse_order<market::Offer>(s, "--offer"));
  for (const auto& s : bid_specs) bids.push_back(parse_order<market::Bid>(s, "--bid"));

  const auto result = market::clear_market(std::move(offers), std::move(bids));
  print_market(result, out);
  if (!c.out_dir.empty()) write_text(c.out_dir, "market.json", json(result).dump(2) + "\n");
  return kSuccess;
}

int cmd_simulate(const Common& c, unsigned threads, const std::string& voltage_interval, std::ostream& out) {
  auto sc = scenario::load_scenario(c.scenario);
  apply_overrides(sc, c);
  const auto formats = report::parse_formats(c.formats);

  std::optional<int> chosen;
  if (!voltage_interval.empty()) {
    const auto minute = scenario::parse_clock(voltage_interval);
    if (!minute) throw InvalidInput("--voltage-interval expects HH:MM");
    chosen = static_cast<int>(*minute / (sc.tariffs.interval_hours * 60.0));
  }

  const auto rep = report::run_day(sc, {!c.no_feasibility, threads});
  const auto written = report::emit_reports(rep, c.out_dir.empty() ? "out" : c.out_dir, formats, chosen);

  std::size_t txns = 0;
  for (const auto& r : rep.intervals) txns += r.market.transactions.size();
  out << "scenario: " << rep.scenario << "\nintervals: " << rep.intervals.size() << "\ntransactions: " << txns
      << '\n';
  for (const auto& [id, cents] : rep.settlement.seller_profit_cents)
    out << "seller " << id.str() << " profit: " << dollars(cents) << '\n';
  for (const auto& [id, cents] : rep.settlement.buyer_savings_cents)
    out << "buyer " << id.str() << " savings: " << dollars(cents) << '\n';
  if (!c.no_feasibility)
    out << "voltage violations: " << (rep.any_voltage_violation ? "yes" : "no")
        << "\ntransaction losses: " << report::format_number(rep.total_transaction_losses_kwh) << " kWh\n";
  for (const auto& path : written) out << "wrote " << path.string() << '\n';
  for (const auto& r : rep.intervals)
    if (r.error) out << "interval " << r.start << " failed: " << r.error->message << '\n';
  return rep.partial ? kPartialRun : kSuccess;
}

int cmd_feasibility(const Common& c, const std::string& network_path, const std::string& txn_file,
                    const std::vector<std::string>& trades, long annualize_intervals, std::ostream& out) {
  std::optional<scenario::Scenario> sc;
  grid::ValidatedNetwork network;
  feasibility::VoltageLimits limits;
  grid::SolverSettings solver;
  std::map<market::ProsumerId, grid::BusId> placement;
  settlement::TariffSchedule tariffs = settlement::default_tariffs();
  if (!c.scenario.empty()) {
    sc = scenario::load_scenario(c.scenario);
    apply_overrides(*sc, c);
    network = sc->network;
    limits = sc->limits;
    solver = sc->solver;
    placement = sc->placement();
    tariffs = sc->tariffs;
  } else if (!network_path.empty()) {
    network = grid::validate_network(scenario::load_network(network_path));
    if (!c.limits.empty()) limits = parse_limits(c.limits);
    if (c.tolerance != 0.0) solver = grid::solver_settings(c.tolerance, solver.max_iterations);
  } else {
    throw InvalidInput("feasibility needs --scenario or --network");
  }

  market::MarketResult batch;
  if (!txn_file.empty()) {
    std::istringstream in(read_text(txn_file));
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (header) {
        header = false;
        if (line.rfind("seller,buyer,power_kw", 0) != 0)
          throw ParseError(txn_file, line_no, "header", "expected seller,buyer,power_kw[,price_ckwh]");
        continue;
      }
      const auto cells = split(line, ',');
      if (cells.size() < 3) throw ParseError(txn_file, line_no, "", "expected at least 3 columns");
      market::Transaction t;
      t.index = static_cast<int>(batch.transactions.size()) + 1;
      t.seller = market::ProsumerId(cells[0]);
      t.buyer = market::ProsumerId(cells[1]);
      t.power = to_number(cells[2], txn_file + ":" + std::to_string(line_no));
      t.price = cells.size() > 3 && !cells[3].empty() ? to_number(cells[3], txn_file) : 0.0;
      if (!(t.power > 0.0)) throw ParseError(txn_file, line_no, "power_kw", "must be > 0");
      batch.transactions.push_back(t);
    }
    // Ids of the form busN place themselves at bus N.
    for (const auto& t : batch.transactions) {
      for (const auto* id : {&t.seller, &t.buyer}) {
        if (placement.count(*id) || id->str().rfind("bus", 0) != 0) continue;
        placement[*id] = to_int(id->str().substr(3), "bus id " + id->str());
      }
    }
  }
  for (const auto& spec : trades) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw InvalidInput("--trade expects SELLER_BUS:BUYER_BUS:KW, got '" + spec + "'");
    const std::string seller = "bus" + parts[0];
    const std::string buyer = "bus" + parts[1];
    placement[market::ProsumerId(seller)] = to_int(parts[0], "--trade");
    placement[market::ProsumerId(buyer)] = to_int(parts[1], "--trade");
    const double kw = to_number(parts[2], "--trade");
    if (!(kw > 0.0)) throw InvalidInput("--trade power must be > 0");
    batch.transactions.push_back({static_cast<int>(batch.transactions.size()) + 1, market::ProsumerId(seller),
                                  market::ProsumerId(buyer), kw, 0.0});
  }

  auto result = feasibility::assess(network, batch, placement, limits, solver);
  if (annualize_intervals > 0)
    result.annualized = feasibility::annualize_losses(std::max(0.0, result.transaction_losses_kw),
                                                      annualize_intervals, tariffs, tariffs.interval_hours);
  print_feasibility(result, out);
  if (!c.out_dir.empty()) write_text(c.out_dir, "feasibility.json", json(result).dump(2) + "\n");
  return kSuccess;
}

int cmd_annualize(const Common& c, double loss_kw, long intervals, double hours, double off_peak,
                  double on_peak, std::ostream& out) {
  settlement::TariffSchedule tariffs = settlement::default_tariffs();
  if (!c.scenario.empty()) tariffs = scenario::load_scenario(c.scenario).tariffs;
  if (off_peak >= 0.0) tariffs.off_peak = off_peak;
  if (on_peak >= 0.0) tariffs.on_peak = on_peak;
  const auto a = feasibility::annualize_losses(loss_kw, intervals, tariffs, hours);
  out << "cumulative: " << report::format_number(a.cumulative_mw()) << " MW\n"
      << "energy: " << report::format_number(a.energy_mwh) << " MWh\n"
      << "cost: $" << report::format_number(a.cost_low_usd) << " - $" << report::format_number(a.cost_high_usd)
      << '\n';
  if (!c.out_dir.empty()) write_text(c.out_dir, "annualized.json", json(a).dump(2) + "\n");
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-to-peer prosumer market clearing with network feasibility checks", "p2pgrid"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool scenario_required) {
    auto* opt = sub->add_option("--scenario", common.scenario, "Scenario file (JSON)");
    if (scenario_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option("--limits", common.limits, "Voltage limits LOWER,UPPER in pu");
    sub->add_option("--tolerance", common.tolerance, "Power-flow tolerance in pu");
  };

  auto* clear = app.add_subcommand("clear", "Clear a single interval market");
  add_common(clear, false);
  std::vector<std::string> offers, bids;
  std::string market_file, interval;
  clear->add_option("--offer", offers, "Offer ID:PRICE:KW:BCRO (repeatable)");
  clear->add_option("--bid", bids, "Bid ID:PRICE:KW:BCRO (repeatable)");
  clear->add_option("--file", market_file, "JSON file with offers and bids")->check(CLI::ExistingFile);
  clear->add_option("--interval", interval, "Interval start HH:MM when clearing from --scenario");

  auto* simulate = app.add_subcommand("simulate", "Run a full day: market, settlement and feasibility");
  add_common(simulate, true);
  unsigned threads = 1;
  std::string voltage_interval;
  simulate->add_option("--format", common.formats, "Report kinds: json,table,plot");
  simulate->add_flag("--no-feasibility", common.no_feasibility, "Skip power-flow studies");
  simulate->add_option("--threads", threads, "Worker threads for interval processing")->check(CLI::Range(1u, 256u));
  simulate->add_option("--voltage-interval", voltage_interval, "Interval (HH:MM) for the bus voltage series");

  auto* feas = app.add_subcommand("feasibility", "Voltage and loss study for a given transaction set");
  add_common(feas, false);
  std::string network_path, txn_file;
  std::vector<std::string> trades;
  long annualize_intervals = 0;
  feas->add_option("--network", network_path, "Network file when no scenario is given")->check(CLI::ExistingFile);
  feas->add_option("--transactions", txn_file, "CSV seller,buyer,power_kw[,price_ckwh]")->check(CLI::ExistingFile);
  feas->add_option("--trade", trades, "Bus-level trade SELLER_BUS:BUYER_BUS:KW (repeatable)");
  feas->add_option("--annualize-intervals", annualize_intervals, "Also annualize the loss over N intervals");

  auto* annualize = app.add_subcommand("losses-annualize", "Extrapolate a per-interval loss to a year");
  add_common(annualize, false);
  double loss_kw = 0.0, hours = 0.25, off_peak = -1.0, on_peak = -1.0;
  long per_year = 35040;
  annualize->add_option("--loss-kw", loss_kw, "Loss per interval, kW")->required();
  annualize->add_option("--intervals-per-year", per_year, "Intervals per year")->capture_default_str();
  annualize->add_option("--interval-hours", hours, "Interval length, h")->capture_default_str();
  annualize->add_option("--off-peak", off_peak, "Off-peak price, c/kWh");
  annualize->add_option("--on-peak", on_peak, "On-peak price, c/kWh");

  std::vector<std::string> argv_storage{"p2pgrid"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (clear->parsed()) return cmd_clear(common, offers, bids, market_file, interval, out);
    if (simulate->parsed()) return cmd_simulate(common, threads, voltage_interval, out);
    if (feas->parsed()) return cmd_feasibility(common, network_path, txn_file, trades, annualize_intervals, out);
    if (annualize->parsed()) return cmd_annualize(common, loss_kw, per_year, hours, off_peak, on_peak, out);
  } catch (const grid::NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace p2pgrid::cli
