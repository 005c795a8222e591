#pragma once

#include <string>

namespace heartflow::heartnet {

enum class ValveId { MV = 0, AV = 1, TV = 2, PV = 3 };
enum class ValveState { Closed, Opening, Open, Closing };

inline constexpr int kValveCount = 4;

const char* to_string(ValveId v);
const char* to_string(ValveState s);
ValveId valve_from_string(const std::string& name);
ValveState valve_state_from_string(const std::string& name);

/// The state that follows `s` along Closed -> Opening -> Open -> Closing -> Closed.
ValveState next_state(ValveState s);
bool is_settled(ValveState s);

/// Switched resistor standing in for a heart valve. Upstream and downstream
/// nodes follow from the id: MV LA->LV, AV LV->aorta, TV RA->RV, PV RV->PA.
struct ValveModel {
  ValveId id = ValveId::MV;
  ValveState state = ValveState::Closed;
  double progress = 0.0;             // of the current transition, in [0, 1]
  double r_open = 0.005;             // mmHg s / mL
  double r_closed = 1e4;
  double transition_duration = 0.0;  // s; 0 means "5% of the cycle"

  /// Throws std::invalid_argument listing every violated invariant.
  void validate() const;
};

/// Settled-state trigger. Closed opens when p_up > p_down; Open starts
/// closing when q_valve < backflow_threshold. Transitional states are
/// returned unchanged.
ValveState valve_trigger(const ValveModel& valve, double p_up, double p_down, double q_valve,
                         double backflow_threshold = 0.0);

/// r_open / r_closed for the settled states; during a transition the
/// log-resistance moves linearly with progress.
double valve_resistance(const ValveModel& valve);

/// Moves a transitional valve forward by dt. Returns true when the
/// transition completes (the valve then sits in Open or Closed).
bool advance_transition(ValveModel& valve, double dt);

}  // namespace heartflow::heartnet
