#include "heartflow/heartnet/valve.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace heartflow::heartnet {

namespace {
std::string upper(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}
}  // namespace

const char* to_string(ValveId v) {
  switch (v) {
    case ValveId::MV: return "MV";
    case ValveId::AV: return "AV";
    case ValveId::TV: return "TV";
    case ValveId::PV: return "PV";
  }
  return "?";
}

const char* to_string(ValveState s) {
  switch (s) {
    case ValveState::Closed: return "Closed";
    case ValveState::Opening: return "Opening";
    case ValveState::Open: return "Open";
    case ValveState::Closing: return "Closing";
  }
  return "?";
}

ValveId valve_from_string(const std::string& name) {
  const auto u = upper(name);
  for (int i = 0; i < kValveCount; ++i)
    if (u == to_string(static_cast<ValveId>(i))) return static_cast<ValveId>(i);
  throw std::invalid_argument("unknown valve '" + name + "'");
}

ValveState valve_state_from_string(const std::string& name) {
  const auto u = upper(name);
  for (auto s : {ValveState::Closed, ValveState::Opening, ValveState::Open, ValveState::Closing})
    if (u == upper(to_string(s))) return s;
  throw std::invalid_argument("unknown valve state '" + name + "'");
}

ValveState next_state(ValveState s) {
  switch (s) {
    case ValveState::Closed: return ValveState::Opening;
    case ValveState::Opening: return ValveState::Open;
    case ValveState::Open: return ValveState::Closing;
    case ValveState::Closing: return ValveState::Closed;
  }
  return s;
}

bool is_settled(ValveState s) { return s == ValveState::Open || s == ValveState::Closed; }

void ValveModel::validate() const {
  std::vector<std::string> bad;
  if (!(r_open > 0.0)) bad.push_back("r_open must be positive");
  if (!(r_closed >= 1e3 * r_open)) bad.push_back("r_closed must be at least 1e3 * r_open");
  if (!(progress >= 0.0 && progress <= 1.0)) bad.push_back("progress must lie in [0, 1]");
  if (!(transition_duration >= 0.0 && std::isfinite(transition_duration)))
    bad.push_back("transition_duration must be finite and >= 0");
  if (!bad.empty()) {
    std::string msg = std::string("valve ") + to_string(id) + ":";
    for (auto& b : bad) msg += " " + b + ";";
    throw std::invalid_argument(msg);
  }
}

ValveState valve_trigger(const ValveModel& valve, double p_up, double p_down, double q_valve,
                         double backflow_threshold) {
  switch (valve.state) {
    case ValveState::Closed: return p_up > p_down ? ValveState::Opening : ValveState::Closed;
    case ValveState::Open: return q_valve < backflow_threshold ? ValveState::Closing : ValveState::Open;
    default: return valve.state;
  }
}

double valve_resistance(const ValveModel& valve) {
  const double p = std::clamp(valve.progress, 0.0, 1.0);
  const double lo = std::log10(valve.r_open), hi = std::log10(valve.r_closed);
  switch (valve.state) {
    case ValveState::Open: return valve.r_open;
    case ValveState::Closed: return valve.r_closed;
    case ValveState::Opening: return std::pow(10.0, hi + (lo - hi) * p);
    case ValveState::Closing: return std::pow(10.0, lo + (hi - lo) * p);
  }
  return valve.r_closed;
}

bool advance_transition(ValveModel& valve, double dt) {
  if (is_settled(valve.state)) return false;
  if (!(valve.transition_duration > 0.0)) {
    valve.state = next_state(valve.state);
    valve.progress = 0.0;
    return true;
  }
  valve.progress += dt / valve.transition_duration;
  if (valve.progress >= 1.0 - 1e-12) {
    valve.state = next_state(valve.state);
    valve.progress = 0.0;
    return true;
  }
  return false;
}

}  // namespace heartflow::heartnet
