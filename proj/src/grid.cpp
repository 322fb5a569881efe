#include "p2pgrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "p2pgrid/errors.hpp"

namespace p2pgrid::grid {
namespace {

using Complex = std::complex<double>;

struct DisjointSet {
  std::vector<std::size_t> up;
  explicit DisjointSet(std::size_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
  std::size_t find(std::size_t i) {
    while (up[i] != i) i = up[i] = up[up[i]];
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[a] = b;
    return true;
  }
};

std::string bus_name(BusId id) { return "bus " + std::to_string(id); }

}  // namespace

std::size_t ValidatedNetwork::index_of(BusId id) const {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw InvalidInput("unknown " + bus_name(id));
  return it->second;
}

std::vector<BusId> ValidatedNetwork::path_to_slack(BusId id) const {
  std::vector<BusId> path;
  std::size_t i = index_of(id);
  path.push_back(model_.buses[i].id);
  while (i != slack_index_) {
    i = parent_[i];
    path.push_back(model_.buses[i].id);
  }
  return path;
}

ValidatedNetwork validate_network(NetworkModel network) {
  if (!(network.base_kva > 0.0) || !(network.base_kv > 0.0))
    throw ValidationError(ValidationIssue::BadBase, "network base_kva and base_kv must be positive");

  ValidatedNetwork out;
  const std::size_t n = network.buses.size();
  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& bus = network.buses[i];
    if (!out.index_of_.emplace(bus.id, i).second)
      throw ValidationError(ValidationIssue::DuplicateBus, "duplicate " + bus_name(bus.id));
    if (bus.kind == BusKind::Slack) {
      ++slack_count;
      out.slack_index_ = i;
    }
    if (!(bus.p_load >= 0.0) || !(bus.q_load >= 0.0))
      throw ValidationError(ValidationIssue::NegativeLoad, bus_name(bus.id) + " has a negative load");
  }
  if (slack_count == 0) throw ValidationError(ValidationIssue::NoSlack, "network has no slack bus");
  if (slack_count > 1)
    throw ValidationError(ValidationIssue::MultipleSlack, "network has more than one slack bus");

  DisjointSet components(n);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);  // (neighbor, branch)
  for (std::size_t k = 0; k < network.branches.size(); ++k) {
    const Branch& br = network.branches[k];
    const std::string label = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
    auto from = out.index_of_.find(br.from);
    auto to = out.index_of_.find(br.to);
    if (from == out.index_of_.end() || to == out.index_of_.end())
      throw ValidationError(ValidationIssue::UnknownBus, label + " references an unknown bus");
    if (!(br.resistance >= 0.0) || !(br.reactance >= 0.0))
      throw ValidationError(ValidationIssue::BadImpedance, label + " has a negative impedance");
    if (br.resistance == 0.0 && br.reactance == 0.0)
      throw ValidationError(ValidationIssue::ZeroImpedance, label + " has zero impedance");
    if (!components.unite(from->second, to->second))
      throw ValidationError(ValidationIssue::Cycle, label + " closes a cycle");
    adjacency[from->second].emplace_back(to->second, k);
    adjacency[to->second].emplace_back(from->second, k);
  }

  out.parent_.assign(n, out.slack_index_);
  out.feeding_branch_.assign(n, 0);
  out.children_.assign(n, {});
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(out.slack_index_);
  seen[out.slack_index_] = true;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    out.order_.push_back(i);
    for (auto [j, k] : adjacency[i]) {
      if (seen[j]) continue;
      seen[j] = true;
      out.parent_[j] = i;
      out.feeding_branch_[j] = k;
      out.children_[i].push_back(j);
      frontier.push(j);
    }
  }
  if (out.order_.size() != n) {
    auto missing = std::find(seen.begin(), seen.end(), false) - seen.begin();
    throw ValidationError(ValidationIssue::Disconnected,
                          bus_name(network.buses[missing].id) + " is not connected to the slack");
  }

  out.model_ = std::move(network);
  return out;
}

double InjectionSet::total_injection() const {
  double sum = 0.0;
  for (const auto& [bus, kw] : injection_kw) sum += kw;
  return sum;
}

double InjectionSet::total_added_demand() const {
  double sum = 0.0;
  for (const auto& [bus, kw] : added_demand_kw) sum += kw;
  return sum;
}

SolverSettings solver_settings(double tolerance, int max_iterations) {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance))
    throw InvalidInput("solver tolerance must be positive");
  if (max_iterations < 1) throw InvalidInput("solver max_iterations must be >= 1");
  return SolverSettings{tolerance, max_iterations};
}

double PowerFlowSolution::max_v() const {
  double v = 0.0;
  for (const auto& [bus, mag] : v_mag) v = std::max(v, mag);
  return v;
}

double PowerFlowSolution::min_v() const {
  double v = v_mag.empty() ? 0.0 : v_mag.begin()->second;
  for (const auto& [bus, mag] : v_mag) v = std::min(v, mag);
  return v;
}

double total_load_kw(const ValidatedNetwork& network, const InjectionSet& injections) {
  double sum = 0.0;
  for (const auto& bus : network.model().buses) sum += bus.p_load;
  return sum + injections.total_added_demand();
}

PowerFlowSolution power_flow(const ValidatedNetwork& network, const InjectionSet& injections,
                             const SolverSettings& settings) {
  solver_settings(settings.tolerance, settings.max_iterations);

  const NetworkModel& model = network.model();
  const std::size_t n = network.bus_count();
  const std::size_t slack = network.index_of(network.slack());
  const double base_kva = model.base_kva;
  const double z_base = model.base_impedance_ohm();

  // Net constant-power demand per bus, pu.
  std::vector<Complex> demand(n);
  for (std::size_t i = 0; i < n; ++i)
    demand[i] = Complex(model.buses[i].p_load, model.buses[i].q_load) / base_kva;
  auto apply = [&](const std::map<BusId, double>& entries, double sign, const char* what) {
    for (const auto& [bus, kw] : entries) {
      if (!network.has_bus(bus))
        throw InvalidInput(std::string(what) + " at unknown bus " + std::to_string(bus));
      const std::size_t i = network.index_of(bus);
      if (i == slack) throw InvalidInput(std::string(what) + " at the slack bus");
      if (!(kw >= 0.0) || !std::isfinite(kw))
        throw InvalidInput(std::string(what) + " at bus " + std::to_string(bus) + " must be >= 0");
      demand[i] += sign * kw / base_kva;
    }
  };
  apply(injections.injection_kw, -1.0, "injection");
  apply(injections.added_demand_kw, +1.0, "added demand");

  std::vector<Complex> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == slack) continue;
    const Branch& br = model.branches[network.feeding_branch()[i]];
    z[i] = Complex(br.resistance, br.reactance) / z_base;
  }

  const auto& order = network.order();
  const auto& parent = network.parent();
  std::vector<Complex> v(n, Complex(1.0, 0.0));
  std::vector<Complex> current(n);  // current through the branch feeding each bus

  auto backward = [&] {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t i = *it;
      if (i == slack) continue;
      current[i] += std::conj(demand[i] / v[i]);
      current[parent[i]] += current[i];
    }
  };

  PowerFlowSolution sol;
  sol.slack = network.slack();
  bool converged = false;
  bool finite = true;
  int iterations = 0;
  while (iterations < settings.max_iterations) {
    ++iterations;
    std::fill(current.begin(), current.end(), Complex{});
    backward();
    double change = 0.0;
    for (std::size_t i : order) {
      if (i == slack) continue;
      const Complex updated = v[parent[i]] - z[i] * current[i];
      change = std::max(change, std::abs(updated - v[i]));
      v[i] = updated;
    }
    if (!std::isfinite(change)) {
      finite = false;
      break;
    }
    if (change < settings.tolerance) {
      converged = true;
      break;
    }
  }

  // Branch currents consistent with the final voltages.
  std::fill(current.begin(), current.end(), Complex{});
  backward();

  sol.branch_p.assign(model.branches.size(), 0.0);
  sol.branch_q.assign(model.branches.size(), 0.0);
  double losses = 0.0;
  double exported = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const BusId id = model.buses[i].id;
    sol.v_mag[id] = std::abs(v[i]);
    sol.v_ang[id] = std::arg(v[i]);
    if (i == slack) continue;
    const Complex sending = v[parent[i]] * std::conj(current[i]) * base_kva;
    const std::size_t k = network.feeding_branch()[i];
    sol.branch_p[k] = sending.real();
    sol.branch_q[k] = sending.imag();
    losses += std::norm(current[i]) * z[i].real() * base_kva;
    if (parent[i] == slack) exported += sending.real();
  }
  sol.slack_import = exported + model.buses[slack].p_load;
  sol.total_losses = losses;
  sol.converged = converged;
  sol.iterations = iterations;

  if (!converged) {
    throw NonConvergence(finite ? "power flow did not converge within " +
                                      std::to_string(settings.max_iterations) + " iterations"
                                : "power flow diverged",
                         std::move(sol));
  }
  return sol;
}

}  // namespace p2pgrid::grid
