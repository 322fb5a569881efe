#include <string>

#include "p2pgrid/errors.hpp"
#include "p2pgrid/report.hpp"

using nlohmann::json;

namespace p2pgrid {
namespace {

template <typename V>
json id_map(const std::map<market::ProsumerId, V>& m) {
  json out = json::object();
  for (const auto& [id, v] : m) out[id.str()] = v;
  return out;
}

template <typename V>
std::map<market::ProsumerId, V> id_map_from(const json& j) {
  std::map<market::ProsumerId, V> out;
  for (const auto& [key, v] : j.items()) out.emplace(market::ProsumerId(key), v.template get<V>());
  return out;
}

template <typename V>
json bus_map(const std::map<grid::BusId, V>& m) {
  json out = json::object();
  for (const auto& [bus, v] : m) out[std::to_string(bus)] = v;
  return out;
}

template <typename V>
std::map<grid::BusId, V> bus_map_from(const json& j) {
  std::map<grid::BusId, V> out;
  for (const auto& [key, v] : j.items()) out.emplace(std::stoi(key), v.template get<V>());
  return out;
}

}  // namespace

namespace market {

void to_json(json& j, const Transaction& t) {
  j = json{{"index", t.index}, {"seller", t.seller.str()}, {"buyer", t.buyer.str()},
           {"power_kw", t.power}, {"price_ckwh", t.price}};
}

void from_json(const json& j, Transaction& t) {
  t.index = j.at("index").get<int>();
  t.seller = ProsumerId(j.at("seller").get<std::string>());
  t.buyer = ProsumerId(j.at("buyer").get<std::string>());
  t.power = j.at("power_kw").get<double>();
  t.price = j.at("price_ckwh").get<double>();
}

void to_json(json& j, const MarketResult& r) {
  j = json{{"transactions", r.transactions},
           {"seller_curtailed_kw", id_map(r.seller_curtailed)},
           {"buyer_curtailed_kw", id_map(r.buyer_curtailed)},
           {"avg_seller_price_ckwh", id_map(r.avg_seller_price)},
           {"avg_buyer_price_ckwh", id_map(r.avg_buyer_price)},
           {"txn_count_per_seller", id_map(r.txn_count_per_seller)},
           {"txn_count_per_buyer", id_map(r.txn_count_per_buyer)}};
}

void from_json(const json& j, MarketResult& r) {
  r.transactions = j.at("transactions").get<std::vector<Transaction>>();
  r.seller_curtailed = id_map_from<double>(j.at("seller_curtailed_kw"));
  r.buyer_curtailed = id_map_from<double>(j.at("buyer_curtailed_kw"));
  r.avg_seller_price = id_map_from<double>(j.at("avg_seller_price_ckwh"));
  r.avg_buyer_price = id_map_from<double>(j.at("avg_buyer_price_ckwh"));
  r.txn_count_per_seller = id_map_from<int>(j.at("txn_count_per_seller"));
  r.txn_count_per_buyer = id_map_from<int>(j.at("txn_count_per_buyer"));
}

void to_json(json& j, const Offer& o) {
  j = json{{"seller", o.seller.str()}, {"price_ckwh", o.price}, {"quantity_kw", o.quantity}, {"bcro", o.bcro}};
}

void from_json(const json& j, Offer& o) {
  o.seller = ProsumerId(j.at("seller").get<std::string>());
  o.price = j.at("price_ckwh").get<double>();
  o.quantity = j.at("quantity_kw").get<double>();
  o.bcro = j.at("bcro").get<int>();
}

void to_json(json& j, const Bid& b) {
  j = json{{"buyer", b.buyer.str()}, {"price_ckwh", b.price}, {"quantity_kw", b.quantity}, {"bcro", b.bcro}};
}

void from_json(const json& j, Bid& b) {
  b.buyer = ProsumerId(j.at("buyer").get<std::string>());
  b.price = j.at("price_ckwh").get<double>();
  b.quantity = j.at("quantity_kw").get<double>();
  b.bcro = j.at("bcro").get<int>();
}

}  // namespace market

namespace settlement {

void to_json(json& j, const SettlementReport& r) {
  json rows = json::array();
  for (const auto& row : r.breakdown)
    rows.push_back({{"interval", row.interval},
                    {"participant", row.participant.str()},
                    {"role", row.role == Role::Seller ? "seller" : "buyer"},
                    {"amount_cents", row.amount_cents}});
  j = json{{"seller_profit_cents", id_map(r.seller_profit_cents)},
           {"buyer_savings_cents", id_map(r.buyer_savings_cents)},
           {"breakdown", std::move(rows)}};
}

void from_json(const json& j, SettlementReport& r) {
  r.seller_profit_cents = id_map_from<double>(j.at("seller_profit_cents"));
  r.buyer_savings_cents = id_map_from<double>(j.at("buyer_savings_cents"));
  r.breakdown.clear();
  for (const auto& row : j.at("breakdown")) {
    const std::string role = row.at("role").get<std::string>();
    if (role != "seller" && role != "buyer") throw InvalidInput("unknown settlement role " + role);
    r.breakdown.push_back({row.at("interval").get<int>(),
                           market::ProsumerId(row.at("participant").get<std::string>()),
                           role == "seller" ? Role::Seller : Role::Buyer,
                           row.at("amount_cents").get<double>()});
  }
}

}  // namespace settlement

namespace feasibility {

void to_json(json& j, const Violation& v) {
  j = json{{"bus", v.bus},
           {"v_pu", v.v_mag},
           {"limit", v.limit == LimitKind::Upper ? "upper" : "lower"},
           {"severity_pu", v.severity}};
}

void from_json(const json& j, Violation& v) {
  v.bus = j.at("bus").get<grid::BusId>();
  v.v_mag = j.at("v_pu").get<double>();
  const std::string limit = j.at("limit").get<std::string>();
  if (limit != "upper" && limit != "lower") throw InvalidInput("unknown limit kind " + limit);
  v.limit = limit == "upper" ? LimitKind::Upper : LimitKind::Lower;
  v.severity = j.at("severity_pu").get<double>();
}

void to_json(json& j, const AnnualizedLosses& a) {
  j = json{{"cumulative_kw", a.cumulative_kw},
           {"energy_mwh", a.energy_mwh},
           {"cost_low_usd", a.cost_low_usd},
           {"cost_high_usd", a.cost_high_usd}};
}

void from_json(const json& j, AnnualizedLosses& a) {
  a.cumulative_kw = j.at("cumulative_kw").get<double>();
  a.energy_mwh = j.at("energy_mwh").get<double>();
  a.cost_low_usd = j.at("cost_low_usd").get<double>();
  a.cost_high_usd = j.at("cost_high_usd").get<double>();
}

void to_json(json& j, const FeasibilityReport& r) {
  j = json{{"violations", r.violations},
           {"transaction_losses_kw", r.transaction_losses_kw},
           {"p_g_case1_kw", r.p_g_case1},
           {"p_g_case2_kw", r.p_g_case2},
           {"curtailment_kw", bus_map(r.curtailment_applied)},
           {"curtailment_resolved", r.curtailment_resolved},
           {"residual_violations", r.residual_violations},
           {"bus_voltages_pu", bus_map(r.bus_voltages)},
           {"annualized", r.annualized ? json(*r.annualized) : json(nullptr)}};
}

void from_json(const json& j, FeasibilityReport& r) {
  r.violations = j.at("violations").get<std::vector<Violation>>();
  r.transaction_losses_kw = j.at("transaction_losses_kw").get<double>();
  r.p_g_case1 = j.at("p_g_case1_kw").get<double>();
  r.p_g_case2 = j.at("p_g_case2_kw").get<double>();
  r.curtailment_applied = bus_map_from<double>(j.at("curtailment_kw"));
  r.curtailment_resolved = j.at("curtailment_resolved").get<bool>();
  r.residual_violations = j.at("residual_violations").get<std::vector<Violation>>();
  r.bus_voltages = bus_map_from<double>(j.at("bus_voltages_pu"));
  const json& a = j.at("annualized");
  r.annualized = a.is_null() ? std::nullopt : std::optional<AnnualizedLosses>(a.get<AnnualizedLosses>());
}

}  // namespace feasibility

namespace report {

void to_json(json& j, const IntervalRecord& r) {
  json error = nullptr;
  if (r.error)
    error = json{{"kind", r.error->kind == ErrorKind::Solver ? "solver" : "input"},
                 {"message", r.error->message}};
  j = json{{"interval", r.interval},
           {"start", r.start},
           {"grid_price_ckwh", r.grid_price},
           {"market", r.market},
           {"feasibility", r.feasibility ? json(*r.feasibility) : json(nullptr)},
           {"error", std::move(error)}};
}

void from_json(const json& j, IntervalRecord& r) {
  r.interval = j.at("interval").get<int>();
  r.start = j.at("start").get<std::string>();
  r.grid_price = j.at("grid_price_ckwh").get<double>();
  r.market = j.at("market").get<market::MarketResult>();
  const json& f = j.at("feasibility");
  r.feasibility = f.is_null() ? std::nullopt
                              : std::optional<feasibility::FeasibilityReport>(
                                    f.get<feasibility::FeasibilityReport>());
  const json& e = j.at("error");
  if (e.is_null()) {
    r.error.reset();
  } else {
    r.error = IntervalError{e.at("kind").get<std::string>() == "solver" ? ErrorKind::Solver : ErrorKind::Input,
                            e.at("message").get<std::string>()};
  }
}

void to_json(json& j, const RunReport& r) {
  j = json{{"scenario", r.scenario},
           {"interval_hours", r.interval_hours},
           {"fit_ckwh", r.fit},
           {"intervals", r.intervals},
           {"settlement", r.settlement},
           {"any_voltage_violation", r.any_voltage_violation},
           {"total_transaction_losses_kwh", r.total_transaction_losses_kwh},
           {"partial", r.partial}};
}

void from_json(const json& j, RunReport& r) {
  r.scenario = j.at("scenario").get<std::string>();
  r.interval_hours = j.at("interval_hours").get<double>();
  r.fit = j.at("fit_ckwh").get<double>();
  r.intervals = j.at("intervals").get<std::vector<IntervalRecord>>();
  r.settlement = j.at("settlement").get<settlement::SettlementReport>();
  r.any_voltage_violation = j.at("any_voltage_violation").get<bool>();
  r.total_transaction_losses_kwh = j.at("total_transaction_losses_kwh").get<double>();
  r.partial = j.at("partial").get<bool>();
}

std::string to_json_text(const RunReport& report) { return json(report).dump(2) + "\n"; }

RunReport run_report_from_json(const std::string& text) {
  try {
    return json::parse(text).get<RunReport>();
  } catch (const json::exception& e) {
    throw ParseError("report", 0, "", e.what());
  }
}

}  // namespace report
}  // namespace p2pgrid
