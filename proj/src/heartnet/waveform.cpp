#include "heartflow/heartnet/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "heartflow/csv.hpp"

namespace heartflow::heartnet {

namespace {

constexpr double kPi = std::numbers::pi;

// Unit-integral raised-cosine pulse on [0, 1] and its cumulative integral.
double pulse(double u) { return (u <= 0.0 || u >= 1.0) ? 0.0 : 1.0 - std::cos(2.0 * kPi * u); }
double pulse_cum(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u - std::sin(2.0 * kPi * u) / (2.0 * kPi);
}
// Unit-integral half-sine on [0, 1].
double arch(double u) { return (u <= 0.0 || u >= 1.0) ? 0.0 : 0.5 * kPi * std::sin(kPi * u); }
double arch_cum(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * u));
}

double wrap_phase(double phase) {
  double p = std::fmod(phase, 1.0);
  if (p < 0.0) p += 1.0;
  return p;
}

// Interior Fritsch-Butland slope for a monotone Hermite interpolant.
double harmonic_slope(double h0, double h1, double d0, double d1) {
  if (d0 * d1 <= 0.0) return 0.0;
  const double w1 = 2.0 * h1 + h0;
  const double w2 = h1 + 2.0 * h0;
  return (w1 + w2) / (w1 / d0 + w2 / d1);
}

std::vector<double> phase_grid(int samples, std::vector<double> extra) {
  std::vector<double> grid;
  grid.reserve(samples + extra.size() + 1);
  for (int i = 0; i <= samples; ++i) grid.push_back(static_cast<double>(i) / samples);
  for (double e : extra)
    if (e > 0.0 && e < 1.0) grid.push_back(e);
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  for (double g : grid)
    if (out.empty() || g - out.back() > 1e-9) out.push_back(g);
  out.back() = 1.0;
  return out;
}

}  // namespace

const char* to_string(Chamber c) {
  switch (c) {
    case Chamber::LA: return "LA";
    case Chamber::LV: return "LV";
    case Chamber::RA: return "RA";
    case Chamber::RV: return "RV";
  }
  return "?";
}

Chamber chamber_from_string(const std::string& name) {
  std::string up;
  for (char ch : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (up == "LA") return Chamber::LA;
  if (up == "LV") return Chamber::LV;
  if (up == "RA") return Chamber::RA;
  if (up == "RV") return Chamber::RV;
  throw std::invalid_argument("unknown chamber '" + name + "'");
}

ChamberWaveform::ChamberWaveform(Chamber id, std::vector<double> times, std::vector<double> volumes)
    : id_(id), times_(std::move(times)), volumes_(std::move(volumes)) {
  const std::string who = std::string("waveform ") + to_string(id_) + ": ";
  if (times_.size() != volumes_.size())
    throw std::invalid_argument(who + "times and volumes differ in length");
  if (times_.size() < 3) throw std::invalid_argument(who + "need at least 3 samples");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(volumes_[i]))
      throw std::invalid_argument(who + "non-finite sample at index " + std::to_string(i));
    if (volumes_[i] <= 0.0)
      throw std::invalid_argument(who + "volume must be strictly positive (index " +
                                  std::to_string(i) + ")");
    if (i > 0 && times_[i] <= times_[i - 1])
      throw std::invalid_argument(who + "times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
  }
  if (std::abs(volumes_.front() - volumes_.back()) > 1e-9) {
    std::ostringstream os;
    os << who << "not periodic: first volume " << volumes_.front() << " vs last " << volumes_.back();
    throw std::invalid_argument(os.str());
  }
  volumes_.back() = volumes_.front();
  period_ = times_.back() - times_.front();

  const std::size_t n = times_.size() - 1;  // intervals
  std::vector<double> h(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = times_[i + 1] - times_[i];
    d[i] = (volumes_[i + 1] - volumes_[i]) / h[i];
  }
  slopes_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) slopes_[i] = harmonic_slope(h[i - 1], h[i], d[i - 1], d[i]);
  slopes_[0] = harmonic_slope(h[n - 1], h[0], d[n - 1], d[0]);
  slopes_[n] = slopes_[0];

  auto sign = [](double x) { return (x > 0.0) - (x < 0.0); };
  run_end_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int si = sign(d[i]);
    std::size_t j = i;
    if (si != 0)
      for (std::size_t step = 0; step < n && sign(d[(j + 1) % n]) == si; ++step) j = (j + 1) % n;
    run_end_[i] = volumes_[j + 1];
  }
}

ChamberWaveform ChamberWaveform::constant(Chamber id, double volume, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("constant waveform: period must be positive");
  return ChamberWaveform(id, {0.0, period / 2.0, period}, {volume, volume, volume});
}

ChamberWaveform::Local ChamberWaveform::locate(double t) const {
  if (times_.empty()) throw std::logic_error("empty waveform");
  if (!std::isfinite(t)) throw std::invalid_argument("waveform evaluated at non-finite time");
  double tau = std::fmod(t - times_.front(), period_);
  if (tau < 0.0) tau += period_;
  tau += times_.front();
  auto it = std::upper_bound(times_.begin(), times_.end(), tau);
  std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  i = std::min(i, times_.size() - 2);
  const double h = times_[i + 1] - times_[i];
  return {i, h, (tau - times_[i]) / h};
}

double ChamberWaveform::volume(double t) const {
  const auto [i, h, s] = locate(t);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * volumes_[i] + (s3 - 2 * s2 + s) * h * slopes_[i] +
         (-2 * s3 + 3 * s2) * volumes_[i + 1] + (s3 - s2) * h * slopes_[i + 1];
}

double ChamberWaveform::rate(double t) const {
  const auto [i, h, s] = locate(t);
  const double s2 = s * s;
  return (6 * s2 - 6 * s) * volumes_[i] / h + (3 * s2 - 4 * s + 1) * slopes_[i] +
         (-6 * s2 + 6 * s) * volumes_[i + 1] / h + (3 * s2 - 2 * s) * slopes_[i + 1];
}

double ChamberWaveform::acceleration(double t) const {
  const auto [i, h, s] = locate(t);
  return ((12 * s - 6) * volumes_[i] / h + (6 * s - 4) * slopes_[i] +
          (-12 * s + 6) * volumes_[i + 1] / h + (6 * s - 2) * slopes_[i + 1]) /
         h;
}

double ChamberWaveform::run_end_volume(double t) const {
  const auto [i, h, s] = locate(t);
  (void)h;
  (void)s;
  if (volumes_[i + 1] == volumes_[i]) return volume(t);
  return run_end_[i];
}

double ChamberWaveform::min_volume() const {
  return *std::min_element(volumes_.begin(), volumes_.end());
}
double ChamberWaveform::max_volume() const {
  return *std::max_element(volumes_.begin(), volumes_.end());
}

double chamber_flow_source(const ChamberWaveform& waveform, double t) { return waveform.rate(t); }

void VentricleSpec::validate() const {
  std::vector<std::string> bad;
  if (!(esv > 0.0)) bad.push_back("esv must be positive");
  if (!(edv > esv)) bad.push_back("edv must exceed esv");
  if (!(a_start >= 0.0 && a_end > a_start && a_end <= ejection_start && ejection_start < ejection_end &&
        ejection_end <= filling_start && filling_start < 1.0))
    bad.push_back("phases must satisfy 0 <= a_start < a_end <= ejection_start < ejection_end <= filling_start < 1");
  if (!(e_delay >= 0.0 && e_duration > 0.0 && filling_start + e_delay + e_duration <= 1.0))
    bad.push_back("E wave (e_delay, e_duration) must start after filling_start and end before the cycle does");
  if (!(e_fraction >= 0.0 && a_fraction >= 0.0 && e_fraction + a_fraction < 1.0))
    bad.push_back("e_fraction and a_fraction must be non-negative with sum below 1");
  if (!bad.empty()) {
    std::string msg = "ventricle spec:";
    for (auto& b : bad) msg += " " + b + ";";
    throw std::invalid_argument(msg);
  }
}

double VentricleSpec::filled(double phase) const {
  // Filling window runs from filling_start through 1 and on to a_end of the
  // next cycle; express phase on that unwrapped axis.
  double s = wrap_phase(phase);
  if (s < filling_start) s += 1.0;
  const double end = 1.0 + a_end;
  if (s >= end) return 0.0;  // not in the filling window
  const double sv = edv - esv;
  const double diastasis = 1.0 - e_fraction - a_fraction;
  return sv * (e_fraction * pulse_cum((s - filling_start - e_delay) / e_duration) +
               diastasis * arch_cum((s - filling_start) / (end - filling_start)) +
               a_fraction * pulse_cum((s - 1.0 - a_start) / (a_end - a_start)));
}

double VentricleSpec::filling_rate(double phase) const {
  double s = wrap_phase(phase);
  if (s < filling_start) s += 1.0;
  const double end = 1.0 + a_end;
  if (s >= end) return 0.0;
  const double sv = edv - esv;
  const double diastasis = 1.0 - e_fraction - a_fraction;
  return sv * (e_fraction * pulse((s - filling_start - e_delay) / e_duration) / e_duration +
               diastasis * arch((s - filling_start) / (end - filling_start)) / (end - filling_start) +
               a_fraction * pulse((s - 1.0 - a_start) / (a_end - a_start)) / (a_end - a_start));
}

double VentricleSpec::volume(double phase) const {
  const double s = wrap_phase(phase);
  if (s < a_end || s >= filling_start) return esv + filled(s);
  if (s < ejection_start) return edv;
  if (s < ejection_end)
    return edv - (edv - esv) * pulse_cum((s - ejection_start) / (ejection_end - ejection_start));
  return esv;
}

void AtriumSpec::validate() const {
  if (!(min_volume > 0.0)) throw std::invalid_argument("atrium spec: min_volume must be positive");
  if (!(a_reversal >= 0.0)) throw std::invalid_argument("atrium spec: a_reversal must be >= 0");
}

ChamberWaveform synthesize_ventricle(Chamber id, const VentricleSpec& spec, double period,
                                     int samples) {
  spec.validate();
  if (!(period > 0.0)) throw std::invalid_argument("synthesize_ventricle: period must be positive");
  const auto grid = phase_grid(samples, {spec.a_start, spec.a_end, spec.ejection_start, spec.ejection_end,
                                         spec.filling_start, spec.filling_start + spec.e_delay,
                                         spec.filling_start + spec.e_delay + spec.e_duration});
  std::vector<double> t, v;
  for (double g : grid) {
    t.push_back(g * period);
    v.push_back(spec.volume(g));
  }
  v.back() = v.front();
  return ChamberWaveform(id, std::move(t), std::move(v));
}

ChamberWaveform synthesize_atrium(Chamber id, const AtriumSpec& spec, const VentricleSpec& partner,
                                  double period, int samples) {
  spec.validate();
  partner.validate();
  if (!(period > 0.0)) throw std::invalid_argument("synthesize_atrium: period must be positive");
  const double sv = partner.edv - partner.esv;
  const double mean_return = sv + spec.a_reversal;  // per unit phase
  // Volume change since phase 0: venous return minus reversal minus emptying
  // into the ventricle (which equals the ventricle's filled volume since 0).
  const double filled_at0 = partner.filled(0.0);
  auto delta = [&](double s) {
    double out = mean_return * s - spec.a_reversal * pulse_cum((s - partner.a_start) /
                                                                (partner.a_end - partner.a_start));
    if (s < partner.a_end)
      out -= partner.filled(s) - filled_at0;
    else if (s < partner.filling_start)
      out -= sv - filled_at0;
    else
      out -= (sv - filled_at0) + partner.filled(s);
    return out;
  };
  const auto grid = phase_grid(samples, {partner.a_start, partner.a_end, partner.ejection_start,
                                         partner.ejection_end, partner.filling_start,
                                         partner.filling_start + partner.e_duration});
  std::vector<double> t, v;
  double lo = 0.0;
  for (double g : grid) {
    t.push_back(g * period);
    v.push_back(delta(g));
    lo = std::min(lo, v.back());
  }
  for (double& x : v) x += spec.min_volume - lo;
  v.back() = v.front();
  return ChamberWaveform(id, std::move(t), std::move(v));
}

ChamberWaveform load_waveform_csv(Chamber id, const std::string& path) {
  const auto table = csv::read(path);
  const std::string tcol = table.has_column("time") ? "time" : "t";
  std::string vcol;
  for (const std::string& c : {std::string("volume"), std::string(to_string(id))})
    if (table.has_column(c)) vcol = c;
  if (vcol.empty()) {
    std::string lower = to_string(id);
    for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (table.has_column(lower)) vcol = lower;
  }
  if (!table.has_column(tcol) || vcol.empty())
    throw std::invalid_argument(path + ": need a time column and a volume (or chamber) column");
  const std::size_t ti = table.column(tcol), vi = table.column(vcol);
  std::vector<double> times, volumes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    times.push_back(table.number(r, ti));
    volumes.push_back(table.number(r, vi));
  }
  try {
    return ChamberWaveform(id, times, volumes);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace heartflow::heartnet
