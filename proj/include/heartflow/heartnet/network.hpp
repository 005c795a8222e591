#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heartflow/circuit.hpp"
#include "heartflow/heartnet/valve.hpp"
#include "heartflow/heartnet/waveform.hpp"

namespace heartflow::heartnet {

class DegenerateNetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resistive edge between two nodes. Nodes [0, chambers) are unknown chamber
/// pressures, nodes [chambers, chambers + terminals) are prescribed terminal
/// pressures. Positive flow runs from `from` to `to`.
struct FlowEdge {
  int from = 0;
  int to = 0;
  double resistance = 1.0;  // may be +inf (no conductance)
  std::string name;
};

struct NetworkSolution {
  std::vector<double> pressures;   // per chamber
  std::vector<double> edge_flows;  // per edge, from -> to
  /// max over chambers of |net inflow - prescribed dV/dt|
  double mass_residual = 0.0;
};

/// Linear flow balance: for every chamber, the sum over its edges of
/// (p_neighbour - p_chamber) / R equals the chamber's dV/dt. The
/// conductance matrix is assembled and factorised once; solve() may then be
/// called for any terminal values and sources (the same matrix also maps
/// terminal dp/dt and chamber d2V/dt2 to chamber dp/dt and edge dQ/dt).
class FlowNetwork {
 public:
  /// Throws DegenerateNetworkError when some group of chambers has no
  /// conducting path to a terminal, or std::invalid_argument for bad edges.
  FlowNetwork(int chambers, int terminals, std::vector<FlowEdge> edges);

  NetworkSolution solve(const std::vector<double>& terminal_values,
                        const std::vector<double>& chamber_sources) const;

  int chambers() const { return chambers_; }
  int terminals() const { return terminals_; }
  const std::vector<FlowEdge>& edges() const { return edges_; }
  const Eigen::MatrixXd& conductance() const { return g_; }

 private:
  int chambers_;
  int terminals_;
  std::vector<FlowEdge> edges_;
  Eigen::MatrixXd g_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

struct ChamberPressures {
  double p_la = 0.0;
  double p_lv = 0.0;
  double p_ra = 0.0;
  double p_rv = 0.0;

  double operator[](Chamber c) const;
  double& operator[](Chamber c);
};

struct Shunt {
  std::string name;  // "ASD", "VSD", ...
  Chamber a = Chamber::LA;
  Chamber b = Chamber::RA;
  double resistance = 0.005;  // mmHg s / mL
};

enum class Topology { Healthy, Chd };

/// Four-chamber surrogate closing the circulation loop.
///
/// Terminal nodes are the four circulation compartments. Pulmonary veins
/// feed LA and systemic veins feed RA through (r_ven + r_min); AV and PV
/// discharge into the systemic and pulmonary arteries through
/// (valve resistance + r_min). The arterial and venous pressures handed back
/// by the circulation therefore follow from the same edge flows.
struct HeartNetwork {
  std::array<ChamberWaveform, kChamberCount> waveforms;  // indexed by Chamber
  std::array<ValveModel, kValveCount> valves;            // indexed by ValveId
  std::vector<Shunt> shunts;
  bool isovolumetric_clamp = true;
  double backflow_threshold = 0.0;  // mL/s
  int backflow_debounce = 1;        // extra consecutive steps of backflow needed
  /// Upper bound on the rate scaling a clamped ventricle may use to catch
  /// up with its prescribed volume once a valve opens.
  double clamp_catchup_limit = 3.0;
  /// Regression bound on how far the clamp may move mean aortic flow.
  double clamp_flow_tolerance = 0.02;

  const ChamberWaveform& waveform(Chamber c) const { return waveforms[static_cast<int>(c)]; }
  ChamberWaveform& waveform(Chamber c) { return waveforms[static_cast<int>(c)]; }
  const ValveModel& valve(ValveId v) const { return valves[static_cast<int>(v)]; }
  ValveModel& valve(ValveId v) { return valves[static_cast<int>(v)]; }

  Topology topology() const { return shunts.empty() ? Topology::Healthy : Topology::Chd; }
  double period() const;

  /// Checks waveforms (present, equal periods), valves and shunts; every
  /// violation is listed in the exception message.
  void validate() const;
};

/// Edge layout of the assembled heart network.
namespace edge {
inline constexpr int kVenPul = 0;  // pulmonary veins -> LA
inline constexpr int kVenSys = 1;  // systemic veins -> RA
inline constexpr int kMV = 2;      // LA -> LV
inline constexpr int kAV = 3;      // LV -> systemic arteries
inline constexpr int kTV = 4;      // RA -> RV
inline constexpr int kPV = 5;      // RV -> pulmonary arteries
inline constexpr int kFirstShunt = 6;
int of_valve(ValveId v);
}  // namespace edge

/// Terminal order: p_ven_pul, p_ven_sys, p_ar_sys, p_ar_pul.
std::vector<double> terminal_pressures(const circuit::LpnState& s);

FlowNetwork assemble_heart_network(const HeartNetwork& net, const circuit::LpnParameters& params,
                                   const std::array<double, kValveCount>& valve_resistances);

struct HeartSolution {
  ChamberPressures pressures;
  std::vector<double> edge_flows;
  double mass_residual = 0.0;
};

/// Chamber pressures and edge flows for given compartment pressures and
/// chamber dV/dt. `chamber_rates` defaults to the waveform rates at t.
HeartSolution solve_chamber_pressures(const HeartNetwork& net, const circuit::LpnState& lpn,
                                      const circuit::LpnParameters& params, double t,
                                      const std::array<double, kValveCount>& valve_resistances,
                                      const std::optional<std::array<double, kChamberCount>>&
                                          chamber_rates = std::nullopt);

std::array<double, kValveCount> current_valve_resistances(const HeartNetwork& net);

}  // namespace heartflow::heartnet
