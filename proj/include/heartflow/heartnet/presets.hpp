#pragma once

#include <string>

#include "heartflow/circuit.hpp"
#include "heartflow/heartnet/network.hpp"

namespace heartflow::heartnet {

/// Everything needed to run one scenario.
struct Scenario {
  std::string name;
  circuit::LpnParameters lpn;
  circuit::LpnState initial;
  HeartNetwork net;
  VentricleSpec lv, rv;
  AtriumSpec la, ra;
  double period = 0.0;
  double dt = 0.0;
  int cycles = 5;

  /// Rebuilds the four waveforms from the synthetic specs.
  void synthesize_waveforms();
};

/// Healthy circulation: published LPN values and initial state, period
/// 0.690 s, dt 6.896e-4 s, no shunts.
Scenario healthy_preset();

/// Congenital heart disease case: published LPN values and initial state,
/// period 0.496 s, dt 4.276e-4 s, ASD and VSD shunts, stenotic pulmonary
/// valve.
Scenario chd_preset();

Scenario preset_by_name(const std::string& name);

}  // namespace heartflow::heartnet
