#pragma once

#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace p2pgrid::grid {

using BusId = int;

enum class BusKind { Slack, Load };

struct Bus {
  BusId id = 0;
  BusKind kind = BusKind::Load;
  double p_load = 0.0;  // kW
  double q_load = 0.0;  // kvar
  double nominal_v = 0.4;  // kV

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  BusId from = 0;
  BusId to = 0;
  double resistance = 0.0;  // ohm
  double reactance = 0.0;   // ohm

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct NetworkModel {
  std::string name;
  std::string description;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double base_kva = 100.0;
  double base_kv = 0.4;

  double base_impedance_ohm() const { return base_kv * base_kv * 1000.0 / base_kva; }

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

enum class ValidationIssue {
  NoSlack,
  MultipleSlack,
  DuplicateBus,
  UnknownBus,
  NegativeLoad,
  BadImpedance,
  ZeroImpedance,
  Cycle,
  Disconnected,
  BadBase,
};

class ValidationError : public std::runtime_error {
public:
  ValidationError(ValidationIssue issue, const std::string& what)
      : std::runtime_error(what), issue_(issue) {}
  ValidationIssue issue() const noexcept { return issue_; }

private:
  ValidationIssue issue_;
};

// Immutable radial network with its traversal order from the slack root cached.
// Safe to share between concurrent solves.
class ValidatedNetwork {
public:
  const NetworkModel& model() const noexcept { return model_; }
  BusId slack() const noexcept { return model_.buses[slack_index_].id; }
  std::size_t bus_count() const noexcept { return model_.buses.size(); }
  std::size_t branch_count() const noexcept { return model_.branches.size(); }

  bool has_bus(BusId id) const { return index_of_.count(id) > 0; }
  std::size_t index_of(BusId id) const;

  // Bus indices in breadth-first order from the slack (slack first).
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  // Parent bus index of each bus; the slack maps to itself.
  const std::vector<std::size_t>& parent() const noexcept { return parent_; }
  // Index into model().branches of the branch feeding each non-slack bus.
  const std::vector<std::size_t>& feeding_branch() const noexcept { return feeding_branch_; }
  const std::vector<std::vector<std::size_t>>& children() const noexcept { return children_; }

  // Bus ids on the path from `id` up to the slack, inclusive.
  std::vector<BusId> path_to_slack(BusId id) const;

private:
  friend ValidatedNetwork validate_network(NetworkModel network);

  NetworkModel model_;
  std::size_t slack_index_ = 0;
  std::map<BusId, std::size_t> index_of_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> feeding_branch_;
  std::vector<std::vector<std::size_t>> children_;
};

// Checks single slack, unique ids, non-negative loads, branch impedances,
// radiality and connectivity. Throws ValidationError naming the issue.
ValidatedNetwork validate_network(NetworkModel network);

struct InjectionSet {
  std::map<BusId, double> injection_kw;     // generation into the network
  std::map<BusId, double> added_demand_kw;  // extra load on top of the base load

  bool empty() const { return injection_kw.empty() && added_demand_kw.empty(); }
  double total_injection() const;
  double total_added_demand() const;

  friend bool operator==(const InjectionSet&, const InjectionSet&) = default;
};

struct SolverSettings {
  double tolerance = 1e-8;  // pu, max voltage change between sweeps
  int max_iterations = 100;

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

// Throws InvalidInput unless tolerance > 0 and max_iterations >= 1.
SolverSettings solver_settings(double tolerance = 1e-8, int max_iterations = 100);

struct PowerFlowSolution {
  BusId slack = 0;
  std::map<BusId, double> v_mag;  // pu
  std::map<BusId, double> v_ang;  // rad
  // Per network branch (model order), measured at the end nearer the slack.
  std::vector<double> branch_p;  // kW
  std::vector<double> branch_q;  // kvar
  double slack_import = 0.0;     // kW
  double total_losses = 0.0;     // kW
  bool converged = false;
  int iterations = 0;

  double max_v() const;
  double min_v() const;

  friend bool operator==(const PowerFlowSolution&, const PowerFlowSolution&) = default;
};

class NonConvergence : public std::runtime_error {
public:
  NonConvergence(const std::string& what, PowerFlowSolution last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const PowerFlowSolution& last_iterate() const noexcept { return last_; }

private:
  PowerFlowSolution last_;
};

// Backward-forward sweep with constant-power loads and the slack held at 1.0 pu.
// Throws InvalidInput if the injections reference unknown buses or the slack,
// NonConvergence if the sweep does not settle within max_iterations.
PowerFlowSolution power_flow(const ValidatedNetwork& network, const InjectionSet& injections,
                             const SolverSettings& settings = {});

// Σ base loads + Σ added demand, kW.
double total_load_kw(const ValidatedNetwork& network, const InjectionSet& injections);

}  // namespace p2pgrid::grid
