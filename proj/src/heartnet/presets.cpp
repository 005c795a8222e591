#include "heartflow/heartnet/presets.hpp"

#include <stdexcept>

namespace heartflow::heartnet {

namespace {

ValveModel valve(ValveId id, ValveState state, double r_open, double r_closed = 1e4) {
  ValveModel v;
  v.id = id;
  v.state = state;
  v.r_open = r_open;
  v.r_closed = r_closed;
  return v;
}

}  // namespace

void Scenario::synthesize_waveforms() {
  net.waveform(Chamber::LV) = synthesize_ventricle(Chamber::LV, lv, period);
  net.waveform(Chamber::RV) = synthesize_ventricle(Chamber::RV, rv, period);
  net.waveform(Chamber::LA) = synthesize_atrium(Chamber::LA, la, lv, period);
  net.waveform(Chamber::RA) = synthesize_atrium(Chamber::RA, ra, rv, period);
}

Scenario healthy_preset() {
  Scenario s;
  s.name = "healthy";
  s.lpn = {.r_ar_sys = 0.677, .r_ven_sys = 0.064, .r_ar_pul = 0.032, .r_ven_pul = 0.035,
           .c_ar_sys = 0.925, .c_ven_sys = 60.0, .c_ar_pul = 10.0, .c_ven_pul = 16.0,
           .l_ar_sys = 0.005, .l_ven_sys = 0.0005, .l_ar_pul = 0.0005, .l_ven_pul = 0.0005,
           .r_min = 0.002};
  s.initial = {.p_ar_sys = 87.25, .p_ven_sys = 14.703, .p_ar_pul = 17.73, .p_ven_pul = 13.83,
               .q_ar_sys = 110.9, .q_ar_pul = 123.5};
  s.period = 1000 * 6.896e-4;
  s.dt = 6.896e-4;
  s.cycles = 5;

  s.lv = {.edv = 130.0, .esv = 54.0, .a_start = 0.11, .a_end = 0.295, .ejection_start = 0.30,
          .ejection_end = 0.685, .filling_start = 0.72, .e_delay = 0.05, .e_duration = 0.16,
          .e_fraction = 0.55, .a_fraction = 0.25};
  s.rv = s.lv;
  s.rv.edv = 150.0;
  s.rv.esv = 74.0;
  s.rv.ejection_start = 0.305;
  s.rv.ejection_end = 0.73;
  s.rv.filling_start = 0.77;
  s.la = {.min_volume = 45.0, .a_reversal = 2.0};
  s.ra = {.min_volume = 50.0, .a_reversal = 3.0};
  s.synthesize_waveforms();

  s.net.valve(ValveId::MV) = valve(ValveId::MV, ValveState::Open, 0.005);
  s.net.valve(ValveId::AV) = valve(ValveId::AV, ValveState::Closed, 0.005);
  s.net.valve(ValveId::TV) = valve(ValveId::TV, ValveState::Open, 0.005);
  s.net.valve(ValveId::PV) = valve(ValveId::PV, ValveState::Closed, 0.005);
  return s;
}

Scenario chd_preset() {
  Scenario s;
  s.name = "chd";
  s.lpn = {.r_ar_sys = 1.578, .r_ven_sys = 0.315, .r_ar_pul = 0.136, .r_ven_pul = 0.05,
           .c_ar_sys = 0.290, .c_ven_sys = 120.0, .c_ar_pul = 4.0, .c_ven_pul = 160.0,
           .l_ar_sys = 0.6, .l_ven_sys = 5e-5, .l_ar_pul = 0.02, .l_ven_pul = 1.25e-5,
           .r_min = 0.002};
  s.initial = {.p_ar_sys = 60.0, .p_ven_sys = 7.70, .p_ar_pul = 11.50, .p_ven_pul = 10.00,
               .q_ar_sys = 40.0, .q_ar_pul = 35.0};
  s.period = 1160 * 4.276e-4;
  s.dt = 4.276e-4;
  s.cycles = 5;

  s.lv = {.edv = 40.0, .esv = 20.0, .a_start = 0.05, .a_end = 0.235, .ejection_start = 0.245,
          .ejection_end = 0.655, .filling_start = 0.80, .e_delay = 0.05, .e_duration = 0.12,
          .e_fraction = 0.5, .a_fraction = 0.3};
  s.rv = s.lv;
  s.rv.edv = 45.0;
  s.rv.esv = 25.0;
  s.rv.ejection_end = 0.78;
  s.rv.filling_start = 0.82;
  s.la = {.min_volume = 15.0, .a_reversal = 5.0};
  s.ra = {.min_volume = 15.0, .a_reversal = 7.0};
  s.synthesize_waveforms();

  s.net.valve(ValveId::MV) = valve(ValveId::MV, ValveState::Open, 0.005);
  s.net.valve(ValveId::AV) = valve(ValveId::AV, ValveState::Closed, 0.01);
  s.net.valve(ValveId::TV) = valve(ValveId::TV, ValveState::Open, 0.005);
  s.net.valve(ValveId::PV) = valve(ValveId::PV, ValveState::Closed, 0.3);
  s.net.shunts = {{"ASD", Chamber::LA, Chamber::RA, 0.005}, {"VSD", Chamber::LV, Chamber::RV, 0.005}};
  return s;
}

Scenario preset_by_name(const std::string& name) {
  if (name == "healthy") return healthy_preset();
  if (name == "chd") return chd_preset();
  throw std::invalid_argument("unknown preset '" + name + "' (expected healthy or chd)");
}

}  // namespace heartflow::heartnet
