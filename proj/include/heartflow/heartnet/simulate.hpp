#pragma once

#include <array>
#include <string>
#include <vector>

#include "heartflow/circuit.hpp"
#include "heartflow/heartnet/network.hpp"

namespace heartflow::heartnet {

class SimulationError : public std::runtime_error {
 public:
  SimulationError(long step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct StepRecord {
  double t = 0.0;
  circuit::LpnState lpn;
  circuit::BoundaryPressures boundary;
  circuit::BoundaryFlows flows;
  ChamberPressures pressures;
  /// Volumes actually realised by the chambers (differs from the
  /// prescribed ventricular volume while the clamp holds it).
  std::array<double, kChamberCount> volumes{};
  std::array<double, kChamberCount> rates{};
  std::array<ValveState, kValveCount> valve_states{};
  std::array<double, kValveCount> valve_resistances{};
  std::vector<double> edge_flows;
  double mass_residual = 0.0;
};

struct ValveEvent {
  ValveId valve = ValveId::MV;
  ValveState from = ValveState::Closed;
  ValveState to = ValveState::Opening;
  double t = 0.0;
  int cycle = 0;
  double cycle_percent = 0.0;
};

struct SimulationResult {
  double period = 0.0;
  double dt = 0.0;
  std::vector<std::string> edge_names;
  std::vector<StepRecord> steps;
  std::vector<ValveEvent> events;

  /// Indices [first, last) of the steps belonging to cycle k.
  std::pair<std::size_t, std::size_t> cycle_range(int k) const;
  int cycles() const;
};

/// Runs the coupled heart-circulation system for n_cycles periods.
///
/// Per step: solve the chamber pressures at t_n, record, evaluate valve
/// triggers (their effect starts at the next step), advance running valve
/// transitions, then advance the circulation by one RK4 step with the valve
/// resistances frozen. With the clamp enabled a ventricle whose two valves
/// are both non-Open keeps its volume; once a valve opens, it converges back
/// onto its prescribed curve with time constant clamp_recovery_time.
///
/// Requires dt <= period / 500. Throws SimulationError with the step index
/// when the algebraic solve fails.
SimulationResult simulate(HeartNetwork net, const circuit::LpnParameters& params,
                          const circuit::LpnState& init, int n_cycles, double dt);

/// Mean of a per-step quantity over cycle k (trapezoid in time).
double cycle_mean(const SimulationResult& r, int k, double (*get)(const StepRecord&));

/// Largest relative change of the circulation state between the ends of
/// cycles k-1 and k, per component scaled by max(|x|, 1).
double cycle_periodicity_error(const SimulationResult& r, int k);

void write_timeseries_csv(const std::string& path, const SimulationResult& r);
void write_events_csv(const std::string& path, const SimulationResult& r);
/// `time,volume,pressure` for one chamber.
void write_pv_loop_csv(const std::string& path, const SimulationResult& r, Chamber c);

}  // namespace heartflow::heartnet
