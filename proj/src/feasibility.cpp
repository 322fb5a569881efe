#include "p2pgrid/feasibility.hpp"

#include <algorithm>
#include <cmath>

#include "p2pgrid/errors.hpp"

namespace p2pgrid::feasibility {
namespace {

constexpr double kInjectionFloor = 1e-9;  // kW

std::vector<Violation> upper_only(std::vector<Violation> all) {
  std::erase_if(all, [](const Violation& v) { return v.limit != LimitKind::Upper; });
  return all;
}

BusId lookup(const std::map<ProsumerId, BusId>& placement, const ProsumerId& id) {
  auto it = placement.find(id);
  if (it == placement.end()) throw PlacementError("prosumer " + id.str() + " has no bus placement");
  return it->second;
}

}  // namespace

void VoltageLimits::validate() const {
  if (!(lower > 0.0 && lower < 1.0 && upper > 1.0) || !std::isfinite(upper))
    throw ConfigError("voltage limits must satisfy 0 < lower < 1 < upper");
}

grid::InjectionSet map_transactions_to_injections(const market::MarketResult& market,
                                                  const std::map<ProsumerId, BusId>& placement) {
  grid::InjectionSet set;
  for (const auto& txn : market.transactions) {
    set.injection_kw[lookup(placement, txn.seller)] += txn.power;
    set.added_demand_kw[lookup(placement, txn.buyer)] += txn.power;
  }
  return set;
}

std::vector<Violation> check_voltage_limits(const grid::PowerFlowSolution& solution,
                                            const VoltageLimits& limits) {
  if (!solution.converged) throw InvalidInput("voltage check needs a converged power flow");
  limits.validate();
  std::vector<Violation> out;
  for (const auto& [bus, v] : solution.v_mag) {
    if (bus == solution.slack) continue;
    if (v > limits.upper) out.push_back({bus, v, LimitKind::Upper, v - limits.upper});
    else if (v < limits.lower) out.push_back({bus, v, LimitKind::Lower, limits.lower - v});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) { return a.severity > b.severity; });
  return out;
}

LossStudy compute_transaction_losses(const grid::ValidatedNetwork& network,
                                     const grid::InjectionSet& trades,
                                     const grid::SolverSettings& settings) {
  LossStudy study;
  grid::PowerFlowSolution base;
  try {
    base = grid::power_flow(network, {}, settings);
  } catch (const grid::NonConvergence& e) {
    throw CaseFailure("Case I", e);
  }
  try {
    study.case2 = grid::power_flow(network, trades, settings);
  } catch (const grid::NonConvergence& e) {
    throw CaseFailure("Case II", e);
  }
  study.p_g_case1 = base.slack_import;
  study.p_g_case2 = study.case2.slack_import;
  study.losses_case1 = base.total_losses;
  study.losses_case2 = study.case2.total_losses;
  study.transaction_losses_kw = study.p_g_case2 - study.p_g_case1;
  return study;
}

LossStudy compute_transaction_losses(const grid::ValidatedNetwork& network,
                                     const market::MarketResult& market,
                                     const std::map<ProsumerId, BusId>& placement,
                                     const grid::SolverSettings& settings) {
  return compute_transaction_losses(network, map_transactions_to_injections(market, placement),
                                    settings);
}

CurtailmentResult curtail_for_voltage(const grid::ValidatedNetwork& network,
                                      grid::InjectionSet injections, const VoltageLimits& limits,
                                      const grid::SolverSettings& settings, double step_kw) {
  if (!(step_kw > 0.0)) throw InvalidInput("curtailment step must be positive");
  limits.validate();

  CurtailmentResult result;
  for (;;) {
    result.final_solution = grid::power_flow(network, injections, settings);
    ++result.solves;
    auto upper = upper_only(check_voltage_limits(result.final_solution, limits));
    if (upper.empty()) break;

    // Worst bus if it injects, otherwise the injecting bus sitting highest.
    std::optional<BusId> target;
    auto worst = injections.injection_kw.find(upper.front().bus);
    if (worst != injections.injection_kw.end()) {
      target = worst->first;
    } else {
      double best_v = -1.0;
      for (const auto& [bus, kw] : injections.injection_kw) {
        const double v = result.final_solution.v_mag.at(bus);
        if (v > best_v) {
          best_v = v;
          target = bus;
        }
      }
    }
    if (!target) {
      result.resolved = false;
      result.residual = std::move(upper);
      break;
    }

    double& kw = injections.injection_kw[*target];
    const double cut = std::min(step_kw, kw);
    kw -= cut;
    result.curtailed[*target] += cut;
    if (kw <= kInjectionFloor) {
      result.curtailed[*target] += kw;
      injections.injection_kw.erase(*target);
    }
  }
  result.injections = std::move(injections);
  return result;
}

AnnualizedLosses annualize_losses(double loss_kw_per_interval, long intervals_per_year,
                                  const settlement::TariffSchedule& tariffs, double interval_hours) {
  if (!(loss_kw_per_interval >= 0.0) || !std::isfinite(loss_kw_per_interval))
    throw InvalidInput("loss must be a non-negative kW value");
  if (intervals_per_year <= 0) throw InvalidInput("intervals_per_year must be positive");
  if (!(interval_hours > 0.0)) throw InvalidInput("interval_hours must be positive");
  if (!(tariffs.off_peak >= 0.0) || !(tariffs.on_peak >= tariffs.off_peak))
    throw InvalidInput("tariff prices must satisfy 0 <= off_peak <= on_peak");

  AnnualizedLosses out;
  out.cumulative_kw = loss_kw_per_interval * static_cast<double>(intervals_per_year);
  const double energy_kwh = out.cumulative_kw * interval_hours;
  out.energy_mwh = energy_kwh / 1000.0;
  out.cost_low_usd = settlement::cents_to_dollars(energy_kwh * tariffs.off_peak);
  out.cost_high_usd = settlement::cents_to_dollars(energy_kwh * tariffs.on_peak);
  return out;
}

FeasibilityReport assess(const grid::ValidatedNetwork& network, const grid::InjectionSet& trades,
                         const VoltageLimits& limits, const grid::SolverSettings& settings) {
  limits.validate();
  FeasibilityReport report;
  LossStudy study = compute_transaction_losses(network, trades, settings);
  report.transaction_losses_kw = study.transaction_losses_kw;
  report.p_g_case1 = study.p_g_case1;
  report.p_g_case2 = study.p_g_case2;
  report.bus_voltages = study.case2.v_mag;
  report.violations = check_voltage_limits(study.case2, limits);

  const bool over_voltage = std::any_of(report.violations.begin(), report.violations.end(),
                                        [](const Violation& v) { return v.limit == LimitKind::Upper; });
  if (over_voltage) {
    CurtailmentResult curtailment = curtail_for_voltage(network, trades, limits, settings);
    report.curtailment_applied = std::move(curtailment.curtailed);
    report.curtailment_resolved = curtailment.resolved;
    report.residual_violations = std::move(curtailment.residual);
  }
  return report;
}

FeasibilityReport assess(const grid::ValidatedNetwork& network, const market::MarketResult& market,
                         const std::map<ProsumerId, BusId>& placement, const VoltageLimits& limits,
                         const grid::SolverSettings& settings) {
  return assess(network, map_transactions_to_injections(market, placement), limits, settings);
}

}  // namespace p2pgrid::feasibility
