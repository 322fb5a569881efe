#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "p2pgrid/errors.hpp"
#include "p2pgrid/feasibility.hpp"
#include "p2pgrid/scenario.hpp"
#include "test_support.hpp"

using namespace p2pgrid::feasibility;
using p2pgrid::grid::InjectionSet;
using p2pgrid::grid::PowerFlowSolution;
using p2pgrid::grid::ValidatedNetwork;
using p2pgrid::market::MarketResult;
using p2pgrid::market::ProsumerId;

namespace {

const ValidatedNetwork& shipped() {
  static const ValidatedNetwork net =
      p2pgrid::grid::validate_network(p2pgrid::scenario::load_network(testing_support::network_path()));
  return net;
}

InjectionSet trade(int seller_bus, int buyer_bus, double kw) {
  InjectionSet inj;
  inj.injection_kw[seller_bus] = kw;
  inj.added_demand_kw[buyer_bus] = kw;
  return inj;
}

// Midday market of the overvoltage scenario.
MarketResult midday_market() {
  MarketResult r;
  r.transactions = {{1, ProsumerId("S2"), ProsumerId("B2"), 2.8, 14.5},
                    {2, ProsumerId("S2"), ProsumerId("B1"), 1.4, 15.0},
                    {3, ProsumerId("S3"), ProsumerId("B4"), 3.5, 16.0},
                    {4, ProsumerId("S1"), ProsumerId("B3"), 3.7, 16.25}};
  return r;
}

std::map<ProsumerId, BusId> midday_placement() {
  return {{ProsumerId("S1"), 5}, {ProsumerId("S2"), 2}, {ProsumerId("S3"), 4}, {ProsumerId("B1"), 6},
          {ProsumerId("B2"), 3}, {ProsumerId("B3"), 14}, {ProsumerId("B4"), 19}};
}

InjectionSet scaled(InjectionSet inj, double k) {
  for (auto& [b, kw] : inj.injection_kw) kw *= k;
  for (auto& [b, kw] : inj.added_demand_kw) kw *= k;
  return inj;
}

InjectionSet batch_trades() {
  std::ifstream in(testing_support::data_dir() / "scenarios" / "trade_batch.csv");
  std::string line;
  std::getline(in, line);
  InjectionSet inj;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string s, b, kw;
    std::getline(ss, s, ',');
    std::getline(ss, b, ',');
    std::getline(ss, kw, ',');
    inj.injection_kw[std::stoi(s.substr(3))] += std::stod(kw);
    inj.added_demand_kw[std::stoi(b.substr(3))] += std::stod(kw);
  }
  return inj;
}

PowerFlowSolution synthetic_solution(std::map<BusId, double> v) {
  PowerFlowSolution s;
  s.slack = 1;
  s.v_mag = std::move(v);
  s.v_mag[1] = 1.0;
  s.converged = true;
  return s;
}

}  // namespace

TEST(MapTransactions, MiddayTradesLandOnTheirBuses) {
  const auto inj = map_transactions_to_injections(midday_market(), midday_placement());
  const std::map<BusId, double> injection{{2, 4.2}, {4, 3.5}, {5, 3.7}};
  const std::map<BusId, double> demand{{3, 2.8}, {6, 1.4}, {14, 3.7}, {19, 3.5}};
  ASSERT_EQ(inj.injection_kw.size(), injection.size());
  for (const auto& [bus, kw] : injection) EXPECT_NEAR(inj.injection_kw.at(bus), kw, 1e-12) << bus;
  EXPECT_EQ(inj.added_demand_kw, demand);
}

TEST(MapTransactions, EmptyMarket) {
  EXPECT_TRUE(map_transactions_to_injections(MarketResult{}, {}).empty());
}

TEST(MapTransactions, SingleTrade) {
  MarketResult r;
  r.transactions = {{1, ProsumerId("A"), ProsumerId("B"), 5.0, 15.0}};
  const auto inj = map_transactions_to_injections(r, {{ProsumerId("A"), 26}, {ProsumerId("B"), 27}});
  EXPECT_EQ(inj, trade(26, 27, 5.0));
}

TEST(MapTransactions, UnplacedProsumer) {
  auto placement = midday_placement();
  placement.erase(ProsumerId("B3"));
  EXPECT_THROW(map_transactions_to_injections(midday_market(), placement), p2pgrid::PlacementError);
}

TEST(VoltageLimits, DefaultsAndValidation) {
  const VoltageLimits d;
  EXPECT_EQ(d.lower, 0.94);
  EXPECT_EQ(d.upper, 1.10);
  EXPECT_NO_THROW(d.validate());
  EXPECT_THROW((VoltageLimits{1.0, 1.1}.validate()), p2pgrid::ConfigError);
  EXPECT_THROW((VoltageLimits{0.9, 0.99}.validate()), p2pgrid::ConfigError);
  EXPECT_THROW((VoltageLimits{0.0, 1.1}.validate()), p2pgrid::ConfigError);
}

TEST(CheckVoltageLimits, FlagsBothSidesMostSevereFirst) {
  const auto v = check_voltage_limits(synthetic_solution({{2, 1.0}, {3, 1.104}, {4, 0.93}, {5, 1.10}, {6, 0.94}}), {});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].bus, 4);
  EXPECT_EQ(v[0].limit, LimitKind::Lower);
  EXPECT_NEAR(v[0].severity, 0.01, 1e-12);
  EXPECT_EQ(v[1].bus, 3);
  EXPECT_EQ(v[1].limit, LimitKind::Upper);
  EXPECT_NEAR(v[1].severity, 0.004, 1e-12);
}

TEST(CheckVoltageLimits, IgnoresSlackAndRejectsUnconverged) {
  auto s = synthetic_solution({{2, 1.0}});
  s.v_mag[1] = 1.2;
  EXPECT_TRUE(check_voltage_limits(s, {}).empty());
  s.converged = false;
  EXPECT_THROW(check_voltage_limits(s, {}), p2pgrid::InvalidInput);
}

TEST(TransactionLosses, NoTradesNoLoss) {
  const auto st = compute_transaction_losses(shipped(), InjectionSet{});
  EXPECT_EQ(st.transaction_losses_kw, 0.0);
  EXPECT_EQ(st.p_g_case1, st.p_g_case2);
}

TEST(TransactionLosses, AdjacentAndAcrossFeeder) {
  const double adjacent = compute_transaction_losses(shipped(), trade(26, 27, 5.0)).transaction_losses_kw;
  const double across = compute_transaction_losses(shipped(), trade(6, 27, 5.0)).transaction_losses_kw;
  EXPECT_NEAR(adjacent, 0.0732705, 1e-6);
  EXPECT_NEAR(across, 0.6317998, 1e-6);
  EXPECT_GT(across, adjacent);
}

TEST(TransactionLosses, ShippedTradeBatch) {
  const auto st = compute_transaction_losses(shipped(), batch_trades());
  EXPECT_NEAR(st.transaction_losses_kw, 4.4912040, 1e-6);
  EXPECT_GT(st.transaction_losses_kw, 0.0);
}

TEST(TransactionLosses, DeltaEqualsLossDifference) {
  for (const auto& inj : {trade(26, 27, 5.0), trade(6, 27, 5.0), batch_trades(), trade(9, 2, 2.5)}) {
    const auto st = compute_transaction_losses(shipped(), inj);
    EXPECT_NEAR(st.transaction_losses_kw, st.p_g_case2 - st.p_g_case1, 0.0);
    EXPECT_NEAR(st.transaction_losses_kw, st.losses_case2 - st.losses_case1, 1e-6);
  }
}

TEST(TransactionLosses, GrowWithElectricalDistance) {
  double previous = 0.0;
  for (BusId seller : {26, 25, 24, 20, 19}) {
    const double loss = compute_transaction_losses(shipped(), trade(seller, 27, 5.0)).transaction_losses_kw;
    EXPECT_GT(loss, previous) << "seller bus " << seller;
    previous = loss;
  }
}

TEST(TransactionLosses, MarketOverloadMatchesInjections) {
  const auto a = compute_transaction_losses(shipped(), midday_market(), midday_placement());
  const auto b =
      compute_transaction_losses(shipped(), map_transactions_to_injections(midday_market(), midday_placement()));
  EXPECT_EQ(a.transaction_losses_kw, b.transaction_losses_kw);
}

TEST(TransactionLosses, SolverFailureNamesTheCase) {
  InjectionSet heavy;
  heavy.added_demand_kw[27] = 2000.0;
  try {
    compute_transaction_losses(shipped(), heavy);
    FAIL() << "expected failure";
  } catch (const CaseFailure& e) {
    EXPECT_EQ(e.case_label(), "Case II");
  }
}

TEST(Curtailment, NothingToDoWithoutViolations) {
  const auto inj = map_transactions_to_injections(midday_market(), midday_placement());
  const auto r = curtail_for_voltage(shipped(), inj, {});
  EXPECT_TRUE(r.resolved);
  EXPECT_TRUE(r.curtailed.empty());
  EXPECT_EQ(r.injections, inj);
  EXPECT_EQ(r.solves, 1);
}

TEST(Curtailment, TripledMiddayTradesNeedOneStep) {
  const auto inj = scaled(map_transactions_to_injections(midday_market(), midday_placement()), 3.0);
  const auto r = curtail_for_voltage(shipped(), inj, {});
  EXPECT_TRUE(r.resolved);
  EXPECT_EQ(r.curtailed.size(), 1u);
  EXPECT_NEAR(r.curtailed.at(5), 0.1, 1e-12);
  EXPECT_LE(r.final_solution.max_v(), 1.10);
  EXPECT_TRUE(r.residual.empty());
}

TEST(Curtailment, TighterLimitNeedsMoreAndStaysBounded) {
  const auto inj = scaled(map_transactions_to_injections(midday_market(), midday_placement()), 3.0);
  const VoltageLimits tight{0.5, 1.05};
  const auto r = curtail_for_voltage(shipped(), inj, tight);
  EXPECT_TRUE(r.resolved);
  EXPECT_LE(r.final_solution.max_v(), 1.05);
  int bound = 1;
  for (const auto& [bus, kw] : inj.injection_kw) bound += static_cast<int>(std::ceil(kw / kDefaultCurtailStepKw));
  EXPECT_LE(r.solves, bound);
  double removed = 0.0;
  for (const auto& [bus, kw] : r.curtailed) {
    EXPECT_LE(kw, inj.injection_kw.at(bus) + 1e-12);
    removed += kw;
  }
  EXPECT_NEAR(inj.total_injection() - r.injections.total_injection(), removed, 1e-9);
}

TEST(Curtailment, RejectsNonPositiveStep) {
  EXPECT_THROW(curtail_for_voltage(shipped(), {}, {}, {}, 0.0), p2pgrid::InvalidInput);
}

TEST(Assess, FlagsAndCurtailsTripledTrades) {
  const auto inj = scaled(map_transactions_to_injections(midday_market(), midday_placement()), 3.0);
  const auto rep = assess(shipped(), inj, {});
  bool upper_at_5 = false;
  for (const auto& v : rep.violations) upper_at_5 |= v.bus == 5 && v.limit == LimitKind::Upper;
  EXPECT_TRUE(upper_at_5);
  EXPECT_TRUE(rep.curtailment_resolved);
  EXPECT_NEAR(rep.curtailment_applied.at(5), 0.1, 1e-12);
  EXPECT_EQ(rep.bus_voltages.size(), 27u);
}

TEST(Assess, NominalMiddayIsClean) {
  const auto rep = assess(shipped(), midday_market(), midday_placement(), {});
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_TRUE(rep.curtailment_applied.empty());
  EXPECT_GT(rep.transaction_losses_kw, 0.0);
}

TEST(Annualize, ReferenceLoss) {
  const auto a = annualize_losses(1.21, 35040, p2pgrid::settlement::default_tariffs(), 0.25);
  EXPECT_NEAR(a.cumulative_mw(), 42.3984, 1e-9);
  EXPECT_NEAR(a.energy_mwh, 10.5996, 1e-9);
  EXPECT_NEAR(a.cost_low_usd, 2151.7188, 1e-6);
  EXPECT_NEAR(a.cost_high_usd, 2713.4976, 1e-6);
}

TEST(Annualize, ZeroAndLinear) {
  const auto t = p2pgrid::settlement::default_tariffs();
  EXPECT_EQ(annualize_losses(0.0, 35040, t, 0.25), AnnualizedLosses{});
  const auto one = annualize_losses(0.7, 35040, t, 0.25);
  const auto two = annualize_losses(1.4, 35040, t, 0.25);
  EXPECT_NEAR(two.energy_mwh, 2 * one.energy_mwh, 1e-12);
  EXPECT_NEAR(two.cost_high_usd, 2 * one.cost_high_usd, 1e-9);
}

TEST(Annualize, RejectsBadInput) {
  const auto t = p2pgrid::settlement::default_tariffs();
  EXPECT_THROW(annualize_losses(-1.0, 35040, t, 0.25), p2pgrid::InvalidInput);
  EXPECT_THROW(annualize_losses(1.0, 0, t, 0.25), p2pgrid::InvalidInput);
  EXPECT_THROW(annualize_losses(1.0, 35040, t, 0.0), p2pgrid::InvalidInput);
}

namespace {

// Transaction loss on the shipped network from the admittance-matrix oracle.
double oracle_loss(const InjectionSet& inj) {
  const auto& m = shipped().model();
  const double zb = m.base_impedance_ohm();
  std::map<BusId, int> index;
  index[shipped().slack()] = 0;
  for (const auto& b : m.buses)
    if (b.id != shipped().slack()) index.emplace(b.id, static_cast<int>(index.size()));
  const int n = static_cast<int>(index.size());
  std::vector<oracle::Line> lines;
  for (const auto& br : m.branches) lines.push_back({index[br.from], index[br.to], oracle::cplx(br.resistance, br.reactance) / zb});
  auto loads = [&](bool with_trades) {
    std::vector<oracle::cplx> load(n);
    for (const auto& b : m.buses) load[index[b.id]] = {b.p_load / m.base_kva, b.q_load / m.base_kva};
    if (with_trades) {
      for (const auto& [bus, kw] : inj.injection_kw) load[index[bus]] -= kw / m.base_kva;
      for (const auto& [bus, kw] : inj.added_demand_kw) load[index[bus]] += kw / m.base_kva;
    }
    return load;
  };
  const auto v1 = oracle::gauss_seidel(n, lines, loads(false));
  const auto v2 = oracle::gauss_seidel(n, lines, loads(true));
  return (oracle::slack_import(n, lines, v2) - oracle::slack_import(n, lines, v1)) * m.base_kva;
}

}  // namespace

TEST(TransactionLosses, GoldensAgreeWithAdmittanceOracle) {
  EXPECT_NEAR(oracle_loss(trade(26, 27, 5.0)), 0.0732705, 1e-6);
  EXPECT_NEAR(oracle_loss(trade(6, 27, 5.0)), 0.6317998, 1e-6);
}
