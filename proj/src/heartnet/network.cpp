#include "heartflow/heartnet/network.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace heartflow::heartnet {

namespace {

double edge_conductance(double r) { return std::isinf(r) ? 0.0 : 1.0 / r; }

int find(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

FlowNetwork::FlowNetwork(int chambers, int terminals, std::vector<FlowEdge> edges)
    : chambers_(chambers), terminals_(terminals), edges_(std::move(edges)) {
  if (chambers <= 0 || terminals < 0) throw std::invalid_argument("flow network: bad node counts");
  const int nodes = chambers + terminals;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const std::string label = e.name.empty() ? "edge " + std::to_string(k) : e.name;
    if (e.from < 0 || e.from >= nodes || e.to < 0 || e.to >= nodes || e.from == e.to)
      throw std::invalid_argument(label + ": bad node indices");
    if (!(e.resistance > 0.0))
      throw std::invalid_argument(label + ": resistance must be positive");
  }

  // Every connected group of chambers must reach a terminal, otherwise its
  // pressures are undetermined.
  std::vector<int> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& e : edges_)
    if (edge_conductance(e.resistance) > 0.0) parent[find(parent, e.from)] = find(parent, e.to);
  std::vector<bool> grounded(nodes, false);
  for (int t = chambers; t < nodes; ++t) grounded[find(parent, t)] = true;
  std::vector<int> floating;
  for (int c = 0; c < chambers; ++c)
    if (!grounded[find(parent, c)]) floating.push_back(c);
  if (!floating.empty()) {
    std::ostringstream os;
    os << "degenerate configuration: chamber node(s)";
    for (int c : floating) os << ' ' << c;
    os << " have no conducting path to a boundary pressure";
    throw DegenerateNetworkError(os.str());
  }

  g_ = Eigen::MatrixXd::Zero(chambers, chambers);
  for (const auto& e : edges_) {
    const double g = edge_conductance(e.resistance);
    if (e.from < chambers) g_(e.from, e.from) += g;
    if (e.to < chambers) g_(e.to, e.to) += g;
    if (e.from < chambers && e.to < chambers) {
      g_(e.from, e.to) -= g;
      g_(e.to, e.from) -= g;
    }
  }
  ldlt_.compute(g_);
  if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive())
    throw DegenerateNetworkError("degenerate configuration: conductance matrix not positive definite");
}

NetworkSolution FlowNetwork::solve(const std::vector<double>& terminal_values,
                                   const std::vector<double>& chamber_sources) const {
  if (static_cast<int>(terminal_values.size()) != terminals_ ||
      static_cast<int>(chamber_sources.size()) != chambers_)
    throw std::invalid_argument("flow network solve: size mismatch");
  // Balance: sum_j g (p_j - p_c) = s_c  =>  G p = b - s, where b collects
  // terminal contributions.
  Eigen::VectorXd rhs(chambers_);
  for (int c = 0; c < chambers_; ++c) rhs(c) = -chamber_sources[c];
  auto value = [&](int node, const Eigen::VectorXd& p) {
    return node < chambers_ ? p(node) : terminal_values[node - chambers_];
  };
  for (const auto& e : edges_) {
    const double g = edge_conductance(e.resistance);
    if (e.from < chambers_ && e.to >= chambers_) rhs(e.from) += g * terminal_values[e.to - chambers_];
    if (e.to < chambers_ && e.from >= chambers_) rhs(e.to) += g * terminal_values[e.from - chambers_];
  }
  const Eigen::VectorXd p = ldlt_.solve(rhs);
  for (int c = 0; c < chambers_; ++c)
    if (!std::isfinite(p(c))) throw DegenerateNetworkError("flow network solve produced non-finite pressure");

  NetworkSolution out;
  out.pressures.assign(p.data(), p.data() + chambers_);
  out.edge_flows.resize(edges_.size());
  std::vector<double> inflow(chambers_, 0.0);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const double q = edge_conductance(e.resistance) * (value(e.from, p) - value(e.to, p));
    out.edge_flows[k] = q;
    if (e.from < chambers_) inflow[e.from] -= q;
    if (e.to < chambers_) inflow[e.to] += q;
  }
  for (int c = 0; c < chambers_; ++c)
    out.mass_residual = std::max(out.mass_residual, std::abs(inflow[c] - chamber_sources[c]));
  return out;
}

double ChamberPressures::operator[](Chamber c) const {
  switch (c) {
    case Chamber::LA: return p_la;
    case Chamber::LV: return p_lv;
    case Chamber::RA: return p_ra;
    case Chamber::RV: return p_rv;
  }
  return 0.0;
}

double& ChamberPressures::operator[](Chamber c) {
  switch (c) {
    case Chamber::LA: return p_la;
    case Chamber::LV: return p_lv;
    case Chamber::RA: return p_ra;
    default: return p_rv;
  }
}

double HeartNetwork::period() const { return waveforms[0].period(); }

void HeartNetwork::validate() const {
  std::vector<std::string> bad;
  for (int c = 0; c < kChamberCount; ++c) {
    const auto& w = waveforms[c];
    const char* name = to_string(static_cast<Chamber>(c));
    if (w.empty())
      bad.push_back(std::string("waveform ") + name + " missing");
    else if (w.id() != static_cast<Chamber>(c))
      bad.push_back(std::string("waveform in slot ") + name + " belongs to " + to_string(w.id()));
    else if (!waveforms[0].empty() && std::abs(w.period() - waveforms[0].period()) > 1e-9)
      bad.push_back(std::string("waveform ") + name + " period differs from LA");
  }
  for (int v = 0; v < kValveCount; ++v) {
    if (valves[v].id != static_cast<ValveId>(v))
      bad.push_back(std::string("valve slot ") + to_string(static_cast<ValveId>(v)) + " holds " +
                    to_string(valves[v].id));
    try {
      valves[v].validate();
    } catch (const std::invalid_argument& e) {
      bad.push_back(e.what());
    }
  }
  for (const auto& s : shunts) {
    if (s.a == s.b) bad.push_back("shunt " + s.name + " connects a chamber to itself");
    if (!(s.resistance > 0.0)) bad.push_back("shunt " + s.name + " resistance must be positive");
  }
  if (!(backflow_debounce >= 0)) bad.push_back("backflow_debounce must be >= 0");
  if (!(clamp_catchup_limit >= 1.0)) bad.push_back("clamp_catchup_limit must be >= 1");
  if (!(clamp_flow_tolerance > 0.0)) bad.push_back("clamp_flow_tolerance must be positive");
  if (!bad.empty()) {
    std::string msg = "heart network:";
    for (auto& b : bad) msg += " " + b + ";";
    throw std::invalid_argument(msg);
  }
}

int edge::of_valve(ValveId v) {
  switch (v) {
    case ValveId::MV: return kMV;
    case ValveId::AV: return kAV;
    case ValveId::TV: return kTV;
    case ValveId::PV: return kPV;
  }
  return kMV;
}

std::vector<double> terminal_pressures(const circuit::LpnState& s) {
  return {s.p_ven_pul, s.p_ven_sys, s.p_ar_sys, s.p_ar_pul};
}

FlowNetwork assemble_heart_network(const HeartNetwork& net, const circuit::LpnParameters& params,
                                   const std::array<double, kValveCount>& r) {
  constexpr int la = 0, lv = 1, ra = 2, rv = 3;
  constexpr int ven_pul = 4, ven_sys = 5, ar_sys = 6, ar_pul = 7;
  std::vector<FlowEdge> edges = {
      {ven_pul, la, params.r_ven_pul + params.r_min, "pulmonary veins"},
      {ven_sys, ra, params.r_ven_sys + params.r_min, "systemic veins"},
      {la, lv, r[0] + params.r_min, "MV"},
      {lv, ar_sys, r[1] + params.r_min, "AV"},
      {ra, rv, r[2] + params.r_min, "TV"},
      {rv, ar_pul, r[3] + params.r_min, "PV"},
  };
  for (const auto& s : net.shunts)
    edges.push_back({static_cast<int>(s.a), static_cast<int>(s.b), s.resistance, s.name});
  return FlowNetwork(kChamberCount, 4, std::move(edges));
}

std::array<double, kValveCount> current_valve_resistances(const HeartNetwork& net) {
  std::array<double, kValveCount> r{};
  for (int v = 0; v < kValveCount; ++v) r[v] = valve_resistance(net.valves[v]);
  return r;
}

HeartSolution solve_chamber_pressures(const HeartNetwork& net, const circuit::LpnState& lpn,
                                      const circuit::LpnParameters& params, double t,
                                      const std::array<double, kValveCount>& valve_resistances,
                                      const std::optional<std::array<double, kChamberCount>>& rates) {
  const auto network = assemble_heart_network(net, params, valve_resistances);
  std::vector<double> sources(kChamberCount);
  for (int c = 0; c < kChamberCount; ++c)
    sources[c] = rates ? (*rates)[c] : chamber_flow_source(net.waveforms[c], t);
  const auto sol = network.solve(terminal_pressures(lpn), sources);
  HeartSolution out;
  out.pressures = {sol.pressures[0], sol.pressures[1], sol.pressures[2], sol.pressures[3]};
  out.edge_flows = sol.edge_flows;
  out.mass_residual = sol.mass_residual;
  return out;
}

}  // namespace heartflow::heartnet
