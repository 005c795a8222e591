#pragma once

// Closed-loop lumped-parameter circulation: systemic and pulmonary C-R-L
// compartments, their six-variable ODE system, a classical RK4 integrator and
// the pressures handed back to the heart at its inlets and outlets.
//
// Units are mmHg, mL and s throughout.

#include <functional>
#include <string>
#include <vector>

namespace heartflow::circuit {

struct LpnParameters {
  double r_ar_sys = 0.0;   // mmHg s / mL
  double r_ven_sys = 0.0;
  double r_ar_pul = 0.0;
  double r_ven_pul = 0.0;
  double c_ar_sys = 0.0;   // mL / mmHg
  double c_ven_sys = 0.0;
  double c_ar_pul = 0.0;
  double c_ven_pul = 0.0;
  double l_ar_sys = 0.0;   // mmHg s^2 / mL
  double l_ven_sys = 0.0;
  double l_ar_pul = 0.0;
  double l_ven_pul = 0.0;
  double r_min = 0.0;      // coupling resistance at the heart boundaries

  /// Throws std::invalid_argument listing every field that breaks the
  /// positivity rules (R, C > 0; L >= 0; r_min >= 0).
  void validate() const;

  bool operator==(const LpnParameters&) const = default;
};

/// The six unknowns of the circulation model. Also used for their time
/// derivatives, which is why it carries vector-space operators.
struct LpnState {
  double p_ar_sys = 0.0;
  double p_ven_sys = 0.0;
  double p_ar_pul = 0.0;
  double p_ven_pul = 0.0;
  double q_ar_sys = 0.0;
  double q_ar_pul = 0.0;

  LpnState& operator+=(const LpnState& o);
  LpnState& operator*=(double s);
  friend LpnState operator+(LpnState a, const LpnState& b) { return a += b; }
  friend LpnState operator-(LpnState a, const LpnState& b) { return a += (b * -1.0); }
  friend LpnState operator*(LpnState a, double s) { return a *= s; }
  friend LpnState operator*(double s, LpnState a) { return a *= s; }

  bool operator==(const LpnState&) const = default;

  static constexpr int kSize = 6;
  double operator[](int i) const;
  double& operator[](int i);
  static const char* name(int i);
};

using LpnDerivative = LpnState;

/// Flows exchanged with the heart. q_ao and q_pa leave the heart into the
/// arteries, q_ven_* enter the atria from the veins.
struct BoundaryFlows {
  double q_ao = 0.0;
  double q_pa = 0.0;
  double q_ven_sys = 0.0;
  double q_ven_pul = 0.0;
  double dq_ven_sys_dt = 0.0;
  double dq_ven_pul_dt = 0.0;
};

struct BoundaryPressures {
  double p_la_in = 0.0;
  double p_ra_in = 0.0;
  double p_ao_out = 0.0;
  double p_pa_out = 0.0;
};

/// Time derivatives of the compartment pressures and arterial flows.
/// Rejects non-finite inputs (the message names the field) and zero arterial
/// inductance, for which the flow equation is algebraic rather than an ODE.
LpnDerivative lpn_rhs(const LpnState& state, const BoundaryFlows& flows,
                      const LpnParameters& params);

/// Supplies boundary flows at a given time for a given (stage) state. Coupled
/// heart models solve their algebraic closure here; prescribed flow series
/// simply ignore the state argument.
using FlowProvider = std::function<BoundaryFlows(double t, const LpnState& state)>;

/// One classical RK4 step from t to t + dt, querying the provider at t,
/// t + dt/2 (twice) and t + dt.
LpnState rk4_step(const LpnState& state, const FlowProvider& flows,
                  const LpnParameters& params, double t, double dt);

BoundaryPressures boundary_pressures(const LpnState& state, const BoundaryFlows& flows,
                                     const LpnParameters& params);

/// Prescribed boundary flows sampled on a time grid. Values between samples
/// are linearly interpolated; venous flow derivatives are centred finite
/// differences at interior samples and one-sided at the two ends.
class FlowSeries {
 public:
  FlowSeries(std::vector<double> times, std::vector<double> q_ao, std::vector<double> q_pa,
             std::vector<double> q_ven_sys, std::vector<double> q_ven_pul);

  BoundaryFlows at(double t) const;
  FlowProvider provider() const;

  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
  std::vector<double> q_ao_, q_pa_, q_vs_, q_vp_;
  std::vector<double> dq_vs_, dq_vp_;
};

struct TracePoint {
  double t = 0.0;
  LpnState state;
  BoundaryPressures pressures;
};

/// Writes `time,<six states>,<four boundary pressures>` with a header row.
void write_state_csv(const std::string& path, const std::vector<TracePoint>& trace);

}  // namespace heartflow::circuit
