#pragma once

#include <string>
#include <vector>

namespace heartflow::heartnet {

enum class Chamber { LA = 0, LV = 1, RA = 2, RV = 3 };

inline constexpr int kChamberCount = 4;
const char* to_string(Chamber c);
Chamber chamber_from_string(const std::string& name);

/// Periodic chamber volume curve [mL] over one cardiac cycle [s].
///
/// Samples are joined by a periodic monotone cubic Hermite interpolant
/// (Fritsch-Carlson slopes): C1, cubic on every interval, and free of
/// overshoot, so runs of equal samples (isovolumetric phases) stay exactly
/// flat and the derivative there is exactly zero.
class ChamberWaveform {
 public:
  ChamberWaveform() = default;

  /// `times` strictly increasing, spanning one period from times.front();
  /// `volumes` strictly positive with the last sample equal to the first
  /// within 1e-9 mL. Throws std::invalid_argument otherwise.
  ChamberWaveform(Chamber id, std::vector<double> times, std::vector<double> volumes);

  static ChamberWaveform constant(Chamber id, double volume, double period);

  Chamber id() const { return id_; }
  double period() const { return period_; }
  bool empty() const { return times_.empty(); }

  double volume(double t) const;
  /// dV/dt [mL/s]; the chamber's net inflow.
  double rate(double t) const;
  /// d2V/dt2 [mL/s^2]; piecewise linear, discontinuous at samples.
  double acceleration(double t) const;

  /// Volume at the end of the monotone run (filling or emptying) that
  /// contains t; volume(t) itself on a flat stretch.
  double run_end_volume(double t) const;

  double min_volume() const;
  double max_volume() const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& volumes() const { return volumes_; }
  const std::vector<double>& slopes() const { return slopes_; }

 private:
  struct Local {
    std::size_t i;
    double h, s;
  };
  Local locate(double t) const;

  Chamber id_ = Chamber::LA;
  std::vector<double> times_;
  std::vector<double> volumes_;
  std::vector<double> slopes_;
  std::vector<double> run_end_;
  double period_ = 0.0;
};

/// dV/dt of the waveform at t (wrapped into the period).
double chamber_flow_source(const ChamberWaveform& waveform, double t);

/// Smooth ventricular volume curve parameterised by end-diastolic and
/// end-systolic volume and phase fractions of the cycle. The cycle starts
/// in late diastole:
///
///   [0, a_start)                slow (diastasis) filling
///   [a_start, a_end)            diastasis plus the atrial kick
///   [a_end, ejection_start)     isovolumetric contraction (flat at EDV)
///   [ejection_start, ejection_end)  ejection EDV -> ESV
///   [ejection_end, filling_start)   isovolumetric relaxation (flat at ESV)
///   [filling_start, 1)          early (E) filling plus slow diastasis filling
///
/// The filling stroke splits into e_fraction (E wave over e_duration,
/// starting e_delay after filling_start),
/// a_fraction (atrial kick) and the remainder spread over the whole filling
/// window, so the filling rate stays strictly positive between the E and A
/// waves.
struct VentricleSpec {
  double edv = 120.0;
  double esv = 50.0;
  double a_start = 0.0;
  double a_end = 0.25;
  double ejection_start = 0.28;
  double ejection_end = 0.64;
  double filling_start = 0.68;
  double e_delay = 0.0;
  double e_duration = 0.16;
  double e_fraction = 0.6;
  double a_fraction = 0.25;

  void validate() const;
  double volume(double phase) const;
  /// Positive part of dV/d(phase) during filling, per unit phase [mL].
  double filling_rate(double phase) const;
  /// Cumulative filled volume since filling_start, wrapping through phase 0.
  double filled(double phase) const;
};

/// Atrial curve built to pair with its ventricle: venous return arrives at a
/// steady rate except for a reversal of `a_reversal` mL pushed back into the
/// veins during the atrial kick, and the atrium empties into the ventricle as
/// the ventricle fills. The result has the usual a-wave dip and v-wave peak.
struct AtriumSpec {
  double min_volume = 40.0;
  double a_reversal = 2.0;

  void validate() const;
};

/// Samples a spec densely (plus every phase boundary) and builds the
/// interpolated waveform.
ChamberWaveform synthesize_ventricle(Chamber id, const VentricleSpec& spec, double period,
                                     int samples = 400);
ChamberWaveform synthesize_atrium(Chamber id, const AtriumSpec& spec,
                                  const VentricleSpec& partner, double period,
                                  int samples = 400);

/// Reads `time,volume` columns (or `time,<chamber name>`) from a CSV file.
ChamberWaveform load_waveform_csv(Chamber id, const std::string& path);

}  // namespace heartflow::heartnet
