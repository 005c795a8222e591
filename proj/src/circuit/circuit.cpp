#include "heartflow/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "heartflow/csv.hpp"

namespace heartflow::circuit {

namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v))
    throw std::invalid_argument(std::string("non-finite value in '") + field + "'");
}

}  // namespace

void LpnParameters::validate() const {
  std::string bad;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) bad += std::string(bad.empty() ? "" : ", ") + name + " must be > 0";
  };
  auto non_negative = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) bad += std::string(bad.empty() ? "" : ", ") + name + " must be >= 0";
  };
  positive(r_ar_sys, "r_ar_sys");
  positive(r_ven_sys, "r_ven_sys");
  positive(r_ar_pul, "r_ar_pul");
  positive(r_ven_pul, "r_ven_pul");
  positive(c_ar_sys, "c_ar_sys");
  positive(c_ven_sys, "c_ven_sys");
  positive(c_ar_pul, "c_ar_pul");
  positive(c_ven_pul, "c_ven_pul");
  non_negative(l_ar_sys, "l_ar_sys");
  non_negative(l_ven_sys, "l_ven_sys");
  non_negative(l_ar_pul, "l_ar_pul");
  non_negative(l_ven_pul, "l_ven_pul");
  non_negative(r_min, "r_min");
  if (!bad.empty()) throw std::invalid_argument("invalid LPN parameters: " + bad);
}

LpnState& LpnState::operator+=(const LpnState& o) {
  for (int i = 0; i < kSize; ++i) (*this)[i] += o[i];
  return *this;
}

LpnState& LpnState::operator*=(double s) {
  for (int i = 0; i < kSize; ++i) (*this)[i] *= s;
  return *this;
}

double LpnState::operator[](int i) const { return const_cast<LpnState&>(*this)[i]; }

double& LpnState::operator[](int i) {
  switch (i) {
    case 0: return p_ar_sys;
    case 1: return p_ven_sys;
    case 2: return p_ar_pul;
    case 3: return p_ven_pul;
    case 4: return q_ar_sys;
    case 5: return q_ar_pul;
  }
  throw std::out_of_range("LpnState index");
}

const char* LpnState::name(int i) {
  static const char* names[kSize] = {"p_ar_sys", "p_ven_sys", "p_ar_pul",
                                     "p_ven_pul", "q_ar_sys",  "q_ar_pul"};
  if (i < 0 || i >= kSize) throw std::out_of_range("LpnState index");
  return names[i];
}

LpnDerivative lpn_rhs(const LpnState& s, const BoundaryFlows& f, const LpnParameters& p) {
  for (int i = 0; i < LpnState::kSize; ++i) require_finite(s[i], LpnState::name(i));
  require_finite(f.q_ao, "q_ao");
  require_finite(f.q_pa, "q_pa");
  require_finite(f.q_ven_sys, "q_ven_sys");
  require_finite(f.q_ven_pul, "q_ven_pul");
  if (!(p.l_ar_sys > 0.0) || !(p.l_ar_pul > 0.0))
    throw std::invalid_argument("arterial inductances must be > 0 to integrate the arterial flows");

  LpnDerivative d;
  d.p_ar_sys = (f.q_ao - s.q_ar_sys) / p.c_ar_sys;
  d.p_ven_sys = (s.q_ar_sys - f.q_ven_sys) / p.c_ven_sys;
  d.p_ar_pul = (f.q_pa - s.q_ar_pul) / p.c_ar_pul;
  d.p_ven_pul = (s.q_ar_pul - f.q_ven_pul) / p.c_ven_pul;
  d.q_ar_sys = -p.r_ar_sys / p.l_ar_sys * s.q_ar_sys - (s.p_ven_sys - s.p_ar_sys) / p.l_ar_sys;
  d.q_ar_pul = -p.r_ar_pul / p.l_ar_pul * s.q_ar_pul - (s.p_ven_pul - s.p_ar_pul) / p.l_ar_pul;
  return d;
}

LpnState rk4_step(const LpnState& y, const FlowProvider& flows, const LpnParameters& p,
                  double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const double h2 = 0.5 * dt;
  const LpnDerivative k1 = lpn_rhs(y, flows(t, y), p);
  const LpnState y2 = y + h2 * k1;
  const LpnDerivative k2 = lpn_rhs(y2, flows(t + h2, y2), p);
  const LpnState y3 = y + h2 * k2;
  const LpnDerivative k3 = lpn_rhs(y3, flows(t + h2, y3), p);
  const LpnState y4 = y + dt * k3;
  const LpnDerivative k4 = lpn_rhs(y4, flows(t + dt, y4), p);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

BoundaryPressures boundary_pressures(const LpnState& s, const BoundaryFlows& f,
                                     const LpnParameters& p) {
  BoundaryPressures b;
  b.p_la_in = s.p_ven_pul - p.r_ven_pul * f.q_ven_pul - p.l_ven_pul * f.dq_ven_pul_dt -
              p.r_min * f.q_ven_pul;
  b.p_ao_out = s.p_ar_sys + p.r_min * f.q_ao;
  b.p_ra_in = s.p_ven_sys - p.r_ven_sys * f.q_ven_sys - p.l_ven_sys * f.dq_ven_sys_dt -
              p.r_min * f.q_ven_sys;
  b.p_pa_out = s.p_ar_pul + p.r_min * f.q_pa;
  for (double v : {b.p_la_in, b.p_ra_in, b.p_ao_out, b.p_pa_out})
    require_finite(v, "boundary pressure");
  return b;
}

namespace {

std::vector<double> fd_derivative(const std::vector<double>& t, const std::vector<double>& q) {
  const std::size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d.front() = (q[1] - q[0]) / (t[1] - t[0]);
  d.back() = (q[n - 1] - q[n - 2]) / (t[n - 1] - t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (q[i + 1] - q[i - 1]) / (t[i + 1] - t[i - 1]);
  return d;
}

}  // namespace

FlowSeries::FlowSeries(std::vector<double> times, std::vector<double> q_ao,
                       std::vector<double> q_pa, std::vector<double> q_ven_sys,
                       std::vector<double> q_ven_pul)
    : times_(std::move(times)),
      q_ao_(std::move(q_ao)),
      q_pa_(std::move(q_pa)),
      q_vs_(std::move(q_ven_sys)),
      q_vp_(std::move(q_ven_pul)) {
  const std::size_t n = times_.size();
  if (n == 0) throw std::invalid_argument("FlowSeries: empty time grid");
  if (q_ao_.size() != n || q_pa_.size() != n || q_vs_.size() != n || q_vp_.size() != n)
    throw std::invalid_argument("FlowSeries: column lengths differ from the time grid");
  for (std::size_t i = 1; i < n; ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("FlowSeries: times must be strictly increasing");
  dq_vs_ = fd_derivative(times_, q_vs_);
  dq_vp_ = fd_derivative(times_, q_vp_);
}

BoundaryFlows FlowSeries::at(double t) const {
  const std::size_t n = times_.size();
  std::size_t i = 0;
  double w = 0.0;
  if (n > 1) {
    if (t <= times_.front()) {
      i = 0;
    } else if (t >= times_.back()) {
      i = n - 2;
      w = 1.0;
    } else {
      i = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) -
                                   times_.begin()) - 1;
      w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    }
  }
  auto lerp = [&](const std::vector<double>& v) {
    return n == 1 ? v[0] : (1.0 - w) * v[i] + w * v[i + 1];
  };
  return {lerp(q_ao_), lerp(q_pa_), lerp(q_vs_), lerp(q_vp_), lerp(dq_vs_), lerp(dq_vp_)};
}

FlowProvider FlowSeries::provider() const {
  return [series = *this](double t, const LpnState&) { return series.at(t); };
}

void write_state_csv(const std::string& path, const std::vector<TracePoint>& trace) {
  csv::Writer w(path);
  w.header({"time", "p_ar_sys", "p_ven_sys", "p_ar_pul", "p_ven_pul", "q_ar_sys", "q_ar_pul",
            "p_la_in", "p_ra_in", "p_ao_out", "p_pa_out"});
  for (const auto& tp : trace) {
    const auto& s = tp.state;
    const auto& b = tp.pressures;
    w.row({tp.t, s.p_ar_sys, s.p_ven_sys, s.p_ar_pul, s.p_ven_pul, s.q_ar_sys, s.q_ar_pul,
           b.p_la_in, b.p_ra_in, b.p_ao_out, b.p_pa_out});
  }
}

}  // namespace heartflow::circuit
