#pragma once

#include <functional>
#include <string>
#include <vector>

#include "heartflow/circuit.hpp"
#include "heartflow/heartnet/network.hpp"
#include "heartflow/heartnet/simulate.hpp"

namespace heartflow::heartnet {

struct CoordinateDescentOptions {
  double initial_step = 0.5;    // natural-log units
  double min_step = 1e-3;
  double tolerance = 1e-4;      // objective value counted as converged
  int max_evaluations = 400;
  bool parallel_probes = true;  // evaluate the +/- probes of a coordinate concurrently
};

struct CoordinateDescentResult {
  std::vector<double> x;
  double objective = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free minimisation over positive parameters: each sweep tries
/// x_i * exp(+-step) per coordinate and keeps any improvement; a sweep
/// without improvement halves the step. Stops on objective <= tolerance,
/// step < min_step or the evaluation budget. `lower`/`upper` may be empty.
CoordinateDescentResult coordinate_descent(const std::function<double(const std::vector<double>&)>& f,
                                           std::vector<double> x0, const std::vector<double>& lower,
                                           const std::vector<double>& upper,
                                           const CoordinateDescentOptions& options);

enum class Site { LA, LV, RA, RV, Aorta, PulmonaryArtery };
enum class Statistic { SystolicMax, DiastolicMin, CycleMean };

const char* to_string(Site s);
const char* to_string(Statistic s);
Site site_from_string(const std::string& s);
Statistic statistic_from_string(const std::string& s);

struct PressureTarget {
  Site site = Site::LV;
  Statistic statistic = Statistic::SystolicMax;
  double value = 0.0;   // mmHg
  double weight = 1.0;  // weight of this target's squared relative error
};

/// Pressure at a site for one recorded step (chamber pressure, or the
/// arterial pressure seen just downstream of AV / PV).
double site_pressure(const StepRecord& s, Site site);

/// Statistic of a site's pressure over cycle k of a run.
double measure(const SimulationResult& r, int k, Site site, Statistic stat);

/// Names accepted as free parameters: any LpnParameters field
/// ("r_ar_sys", "c_ven_pul", ...), "<valve>.r_open" / "<valve>.r_closed"
/// (valve mv, av, tv, pv) and "<shunt>.resistance" (shunt name, e.g. vsd).
double& parameter_ref(const std::string& name, circuit::LpnParameters& lpn, HeartNetwork& net);

struct CalibrationOptions {
  int cycles = 5;  // targets are measured on the last one
  double dt = 0.0;
  CoordinateDescentOptions search;
};

struct TargetResidual {
  PressureTarget target;
  double simulated = 0.0;
  double relative_error = 0.0;  // (simulated - target) / target
};

struct CalibrationResult {
  circuit::LpnParameters params;
  HeartNetwork net;  // carries calibrated valve / shunt values
  std::vector<std::string> free_parameters;
  std::vector<double> values;
  std::vector<TargetResidual> residuals;
  double objective = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Fits the free parameters so that the last simulated cycle matches the
/// pressure targets, minimising the weighted sum of squared relative
/// errors. Invalid probes (failed simulation, broken parameter invariants)
/// count as infinitely bad.
CalibrationResult calibrate(const HeartNetwork& net, const circuit::LpnParameters& params,
                            const circuit::LpnState& init, const std::vector<PressureTarget>& targets,
                            const std::vector<std::string>& free_parameters,
                            const CalibrationOptions& options);

void write_residuals_csv(const std::string& path, const CalibrationResult& r);

}  // namespace heartflow::heartnet
