#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "p2pgrid/grid.hpp"
#include "p2pgrid/market.hpp"
#include "p2pgrid/settlement.hpp"

namespace p2pgrid::feasibility {

using grid::BusId;
using market::ProsumerId;

struct VoltageLimits {
  double lower = 0.94;  // pu
  double upper = 1.10;  // pu

  // Throws ConfigError unless 0 < lower < 1 < upper.
  void validate() const;

  friend bool operator==(const VoltageLimits&, const VoltageLimits&) = default;
};

enum class LimitKind { Lower, Upper };

struct Violation {
  BusId bus = 0;
  double v_mag = 0.0;
  LimitKind limit = LimitKind::Upper;
  double severity = 0.0;  // pu beyond the limit

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct AnnualizedLosses {
  double cumulative_kw = 0.0;  // loss kW summed over all intervals of the year
  double energy_mwh = 0.0;
  double cost_low_usd = 0.0;   // energy at the off-peak price
  double cost_high_usd = 0.0;  // energy at the on-peak price

  double cumulative_mw() const { return cumulative_kw / 1000.0; }

  friend bool operator==(const AnnualizedLosses&, const AnnualizedLosses&) = default;
};

struct LossStudy {
  double p_g_case1 = 0.0;  // slack import, base loads only, kW
  double p_g_case2 = 0.0;  // slack import with P2P trades applied, kW
  double transaction_losses_kw = 0.0;
  double losses_case1 = 0.0;
  double losses_case2 = 0.0;
  grid::PowerFlowSolution case2;
};

struct FeasibilityReport {
  std::vector<Violation> violations;  // from the uncurtailed trade solution
  double transaction_losses_kw = 0.0;
  double p_g_case1 = 0.0;
  double p_g_case2 = 0.0;
  std::map<BusId, double> curtailment_applied;  // kW removed per bus
  bool curtailment_resolved = true;
  std::vector<Violation> residual_violations;
  std::map<BusId, double> bus_voltages;  // pu, trade solution
  std::optional<AnnualizedLosses> annualized;

  friend bool operator==(const FeasibilityReport&, const FeasibilityReport&) = default;
};

class CaseFailure : public grid::NonConvergence {
public:
  CaseFailure(const std::string& case_label, const grid::NonConvergence& cause)
      : grid::NonConvergence(case_label + ": " + cause.what(), cause.last_iterate()),
        case_label_(case_label) {}
  const std::string& case_label() const noexcept { return case_label_; }

private:
  std::string case_label_;
};

// Seller buses inject their traded power; buyer buses get the purchased power as
// extra demand. Throws PlacementError for an unplaced prosumer.
grid::InjectionSet map_transactions_to_injections(const market::MarketResult& market,
                                                  const std::map<ProsumerId, BusId>& placement);

// Non-slack buses outside the band, most severe first. Throws InvalidInput on
// an unconverged solution.
std::vector<Violation> check_voltage_limits(const grid::PowerFlowSolution& solution,
                                            const VoltageLimits& limits);

// Case I: base loads only. Case II: base loads plus the mapped trades. The
// import delta is the incremental loss caused by the trades.
LossStudy compute_transaction_losses(const grid::ValidatedNetwork& network,
                                     const grid::InjectionSet& trades,
                                     const grid::SolverSettings& settings = {});

LossStudy compute_transaction_losses(const grid::ValidatedNetwork& network,
                                     const market::MarketResult& market,
                                     const std::map<ProsumerId, BusId>& placement,
                                     const grid::SolverSettings& settings = {});

struct CurtailmentResult {
  grid::InjectionSet injections;  // reduced
  std::map<BusId, double> curtailed;
  bool resolved = true;
  std::vector<Violation> residual;  // upper violations left when unresolved
  int solves = 0;
  grid::PowerFlowSolution final_solution;
};

inline constexpr double kDefaultCurtailStepKw = 0.1;

// Greedy fixed-step reduction at the worst over-voltage bus until no upper
// violation remains or every injection reaches zero.
CurtailmentResult curtail_for_voltage(const grid::ValidatedNetwork& network,
                                      grid::InjectionSet injections, const VoltageLimits& limits,
                                      const grid::SolverSettings& settings = {},
                                      double step_kw = kDefaultCurtailStepKw);

AnnualizedLosses annualize_losses(double loss_kw_per_interval, long intervals_per_year,
                                  const settlement::TariffSchedule& tariffs, double interval_hours);

// Loss study, voltage check on the trade case and, when it shows upper
// violations, the curtailment response.
FeasibilityReport assess(const grid::ValidatedNetwork& network, const market::MarketResult& market,
                         const std::map<ProsumerId, BusId>& placement, const VoltageLimits& limits,
                         const grid::SolverSettings& settings = {});

FeasibilityReport assess(const grid::ValidatedNetwork& network, const grid::InjectionSet& trades,
                         const VoltageLimits& limits, const grid::SolverSettings& settings = {});

}  // namespace p2pgrid::feasibility
