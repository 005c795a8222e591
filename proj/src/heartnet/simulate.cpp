#include "heartflow/heartnet/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "heartflow/csv.hpp"

namespace heartflow::heartnet {

namespace {

using circuit::BoundaryFlows;
using circuit::LpnState;

constexpr int kLA = 0, kLV = 1, kRA = 2, kRV = 3;

struct Rates {
  std::array<double, kChamberCount> rate{};
  std::array<double, kChamberCount> accel{};
};

struct ValveNodes {
  int up;    // chamber index
  int down;  // chamber index, or -1 for an artery
};

constexpr std::array<ValveNodes, kValveCount> kValveNodes = {{
    {kLA, kLV},  // MV
    {kLV, -1},   // AV
    {kRA, kRV},  // TV
    {kRV, -1},   // PV
}};

bool ventricle_held(const HeartNetwork& net, int chamber) {
  if (!net.isovolumetric_clamp) return false;
  const auto in = chamber == kLV ? ValveId::MV : ValveId::TV;
  const auto out = chamber == kLV ? ValveId::AV : ValveId::PV;
  return net.valve(in).state != ValveState::Open && net.valve(out).state != ValveState::Open;
}

class Driver {
 public:
  Driver(const HeartNetwork& net, const circuit::LpnParameters& params)
      : net_(net), params_(params) {
    realized_[0] = net.waveforms[kLV].volume(0.0);
    realized_[1] = net.waveforms[kRV].volume(0.0);
  }

  // With the clamp on, a ventricle that was held while its curve moved
  // follows the curve at a scaled rate until the end of the current filling
  // or emptying run: the ratio (V_real - V_end) / (V_curve - V_end) stays
  // constant along the run, so the realised volume arrives at V_end together
  // with the curve. The ratio is frozen over one step.
  void begin_step(double t) {
    for (int k = 0; k < 2; ++k) {
      ratio_[k] = 1.0;
      if (!net_.isovolumetric_clamp) continue;
      const auto& w = net_.waveforms[k == 0 ? kLV : kRV];
      const double v_end = w.run_end_volume(t);
      const double span = w.volume(t) - v_end;
      if (std::abs(span) > 1e-9)
        ratio_[k] = std::clamp((realized_[k] - v_end) / span, 0.0, net_.clamp_catchup_limit);
    }
  }

  // Chamber dV/dt and d2V/dt2; `held` ventricles keep their volume.
  Rates rates(double t, const std::array<bool, 2>& held) const {
    Rates r = prescribed(t);
    for (int k = 0; k < 2; ++k) {
      const int c = k == 0 ? kLV : kRV;
      const double f = held[k] ? 0.0 : ratio_[k];
      r.rate[c] *= f;
      r.accel[c] *= f;
    }
    return r;
  }

  Rates prescribed(double t) const {
    Rates r;
    for (int c = 0; c < kChamberCount; ++c) {
      const auto& w = net_.waveforms[c];
      r.rate[c] = w.rate(t);
      r.accel[c] = w.acceleration(t);
    }
    return r;
  }

  struct Solved {
    NetworkSolution sol;
    BoundaryFlows flows;
  };

  Solved solve(const FlowNetwork& network, double t, const LpnState& s, const Rates& r) const {
    std::vector<double> src(r.rate.begin(), r.rate.end());
    Solved out{network.solve(terminal_pressures(s), src), {}};
    auto& f = out.flows;
    const auto& q = out.sol.edge_flows;
    f.q_ao = q[edge::kAV];
    f.q_pa = q[edge::kPV];
    f.q_ven_pul = q[edge::kVenPul];
    f.q_ven_sys = q[edge::kVenSys];
    // Same matrix maps terminal dp/dt and chamber d2V/dt2 onto edge dQ/dt.
    const auto d = circuit::lpn_rhs(s, f, params_);
    std::vector<double> acc(r.accel.begin(), r.accel.end());
    const auto dsol = network.solve({d.p_ven_pul, d.p_ven_sys, d.p_ar_sys, d.p_ar_pul}, acc);
    f.dq_ven_pul_dt = dsol.edge_flows[edge::kVenPul];
    f.dq_ven_sys_dt = dsol.edge_flows[edge::kVenSys];
    (void)t;
    return out;
  }

  std::array<double, 2>& realized() { return realized_; }

 private:
  const HeartNetwork& net_;
  const circuit::LpnParameters& params_;
  std::array<double, 2> realized_{};
  std::array<double, 2> ratio_{1.0, 1.0};
};

}  // namespace

std::pair<std::size_t, std::size_t> SimulationResult::cycle_range(int k) const {
  if (steps.empty() || period <= 0.0) return {0, 0};
  const double t0 = k * period, t1 = (k + 1) * period;
  auto lo = std::lower_bound(steps.begin(), steps.end(), t0 - 1e-9 * period,
                             [](const StepRecord& s, double t) { return s.t < t; });
  auto hi = std::lower_bound(steps.begin(), steps.end(), t1 - 1e-9 * period,
                             [](const StepRecord& s, double t) { return s.t < t; });
  return {static_cast<std::size_t>(lo - steps.begin()), static_cast<std::size_t>(hi - steps.begin())};
}

int SimulationResult::cycles() const {
  if (steps.empty() || period <= 0.0) return 0;
  return static_cast<int>(std::floor(steps.back().t / period + 1e-9));
}

SimulationResult simulate(HeartNetwork net, const circuit::LpnParameters& params,
                          const LpnState& init, int n_cycles, double dt) {
  net.validate();
  params.validate();
  const double period = net.period();
  if (n_cycles < 1) throw std::invalid_argument("simulate: need at least one cycle");
  if (!(dt > 0.0) || dt > period / 500.0 * (1.0 + 1e-9))
    throw std::invalid_argument("simulate: dt must lie in (0, period/500]");
  for (auto& v : net.valves)
    if (!(v.transition_duration > 0.0)) v.transition_duration = 0.05 * period;

  SimulationResult result;
  result.period = period;
  result.dt = dt;

  const long n_steps = std::lround(n_cycles * period / dt);
  result.steps.reserve(n_steps + 1);

  Driver driver(net, params);
  LpnState state = init;
  std::array<int, kValveCount> backflow_steps{};

  auto event = [&](ValveId v, ValveState from, ValveState to, double t) {
    const int cycle = static_cast<int>(std::floor(t / period + 1e-12));
    result.events.push_back({v, from, to, t, cycle, 100.0 * (t - cycle * period) / period});
  };

  for (long n = 0; n <= n_steps; ++n) {
    const double t = n * dt;
    const auto resistances = current_valve_resistances(net);
    const std::array<bool, 2> held = {ventricle_held(net, kLV), ventricle_held(net, kRV)};

    try {
      const FlowNetwork network = assemble_heart_network(net, params, resistances);
      if (result.edge_names.empty())
        for (const auto& e : network.edges()) result.edge_names.push_back(e.name);

      driver.begin_step(t);
      const Rates realized = driver.rates(t, held);
      const auto now = driver.solve(network, t, state, realized);

      StepRecord rec;
      rec.t = t;
      rec.lpn = state;
      rec.flows = now.flows;
      rec.boundary = circuit::boundary_pressures(state, now.flows, params);
      rec.pressures = {now.sol.pressures[kLA], now.sol.pressures[kLV], now.sol.pressures[kRA],
                       now.sol.pressures[kRV]};
      rec.volumes = {net.waveforms[kLA].volume(t), driver.realized()[0],
                     net.waveforms[kRA].volume(t), driver.realized()[1]};
      if (!net.isovolumetric_clamp) {
        rec.volumes[kLV] = net.waveforms[kLV].volume(t);
        rec.volumes[kRV] = net.waveforms[kRV].volume(t);
      }
      rec.rates = realized.rate;
      for (int v = 0; v < kValveCount; ++v) rec.valve_states[v] = net.valves[v].state;
      rec.valve_resistances = resistances;
      rec.edge_flows = now.sol.edge_flows;
      rec.mass_residual = now.sol.mass_residual;
      result.steps.push_back(std::move(rec));
      if (n == n_steps) break;

      // Opening is judged on the pressures the prescribed motion would
      // produce (a held ventricle has no pressure of its own); closing on the
      // flow that actually passes the valve.
      const auto demand = net.isovolumetric_clamp
                              ? driver.solve(network, t, state, driver.prescribed(t))
                              : now;
      std::array<ValveState, kValveCount> next{};
      for (int v = 0; v < kValveCount; ++v) {
        const auto& valve = net.valves[v];
        next[v] = valve.state;
        if (!is_settled(valve.state)) continue;
        const auto [up, down] = kValveNodes[v];
        const double p_up = demand.sol.pressures[up];
        double p_down;
        if (down >= 0)
          p_down = demand.sol.pressures[down];
        else if (static_cast<ValveId>(v) == ValveId::AV)
          p_down = state.p_ar_sys + params.r_min * demand.flows.q_ao;
        else
          p_down = state.p_ar_pul + params.r_min * demand.flows.q_pa;
        const double q = now.sol.edge_flows[edge::of_valve(static_cast<ValveId>(v))];
        const auto proposed = valve_trigger(valve, p_up, p_down, q, net.backflow_threshold);
        if (valve.state == ValveState::Open) {
          if (proposed == ValveState::Closing) {
            if (++backflow_steps[v] > net.backflow_debounce) next[v] = proposed;
          } else {
            backflow_steps[v] = 0;
          }
        } else {
          next[v] = proposed;
        }
      }

      // Running transitions move on; freshly triggered valves start moving
      // at the next step. A valve never changes state twice here.
      for (int v = 0; v < kValveCount; ++v) {
        auto& valve = net.valves[v];
        const auto id = static_cast<ValveId>(v);
        if (!is_settled(valve.state)) {
          const auto before = valve.state;
          if (advance_transition(valve, dt)) event(id, before, valve.state, t + dt);
        } else if (next[v] != valve.state) {
          event(id, valve.state, next[v], t + dt);
          valve.state = next[v];
          valve.progress = 0.0;
          backflow_steps[v] = 0;
        }
      }

      // Circulation step with the valve resistances of this step.
      std::array<double, 2> stage_sum{};
      int stage = 0;
      auto provider = [&](double ts, const LpnState& s) {
        const Rates r = driver.rates(ts, held);
        const double w = (stage == 0 || stage == 3) ? 1.0 : 2.0;
        stage_sum[0] += w * r.rate[kLV];
        stage_sum[1] += w * r.rate[kRV];
        ++stage;
        return driver.solve(network, ts, s, r).flows;
      };
      state = circuit::rk4_step(state, provider, params, t, dt);
      driver.realized()[0] += dt / 6.0 * stage_sum[0];
      driver.realized()[1] += dt / 6.0 * stage_sum[1];
    } catch (const DegenerateNetworkError& e) {
      throw SimulationError(n, e.what());
    } catch (const std::invalid_argument& e) {
      throw SimulationError(n, e.what());
    }
    for (int i = 0; i < LpnState::kSize; ++i)
      if (!std::isfinite(state[i]))
        throw SimulationError(n, std::string("non-finite ") + LpnState::name(i));
  }
  return result;
}

double cycle_mean(const SimulationResult& r, int k, double (*get)(const StepRecord&)) {
  const auto [lo, hi] = r.cycle_range(k);
  if (hi <= lo + 1) throw std::invalid_argument("cycle_mean: cycle not simulated");
  const std::size_t end = std::min(hi, r.steps.size() - 1);
  double acc = 0.0, span = 0.0;
  for (std::size_t i = lo; i < end; ++i) {
    const double h = r.steps[i + 1].t - r.steps[i].t;
    acc += 0.5 * h * (get(r.steps[i]) + get(r.steps[i + 1]));
    span += h;
  }
  return acc / span;
}

double cycle_periodicity_error(const SimulationResult& r, int k) {
  if (k < 1) throw std::invalid_argument("cycle_periodicity_error: need k >= 1");
  const auto [lo, hi] = r.cycle_range(k);
  const auto [plo, phi] = r.cycle_range(k - 1);
  if (hi <= lo + 1 || phi <= plo + 1) throw std::invalid_argument("cycle_periodicity_error: cycle missing");
  double worst = 0.0;
  for (int c = 0; c < LpnState::kSize; ++c) {
    double mn = INFINITY, mx = -INFINITY;
    for (std::size_t i = lo; i < hi; ++i) {
      mn = std::min(mn, r.steps[i].lpn[c]);
      mx = std::max(mx, r.steps[i].lpn[c]);
    }
    const double range = std::max(mx - mn, 1e-12);
    // Compare x(t) with x(t - period), interpolating the previous cycle.
    std::size_t j = plo;
    for (std::size_t i = lo; i < hi; ++i) {
      const double tp = r.steps[i].t - r.period;
      while (j + 1 < r.steps.size() && r.steps[j + 1].t < tp) ++j;
      if (j + 1 >= r.steps.size()) break;
      const auto& a = r.steps[j];
      const auto& b = r.steps[j + 1];
      const double w = std::clamp((tp - a.t) / (b.t - a.t), 0.0, 1.0);
      const double prev = (1.0 - w) * a.lpn[c] + w * b.lpn[c];
      worst = std::max(worst, std::abs(r.steps[i].lpn[c] - prev) / range);
    }
  }
  return worst;
}

void write_timeseries_csv(const std::string& path, const SimulationResult& r) {
  csv::Writer w(path);
  std::vector<std::string> header = {"time"};
  for (int i = 0; i < LpnState::kSize; ++i) header.push_back(LpnState::name(i));
  for (const char* n : {"p_la_in", "p_ra_in", "p_ao_out", "p_pa_out", "p_la", "p_lv", "p_ra", "p_rv",
                        "v_la", "v_lv", "v_ra", "v_rv"})
    header.push_back(n);
  for (int v = 0; v < kValveCount; ++v)
    header.push_back(std::string("state_") + to_string(static_cast<ValveId>(v)));
  for (const auto& e : r.edge_names) header.push_back("q_" + e);
  for (auto& h : header)
    for (char& ch : h)
      if (ch == ' ') ch = '_';
  w.header(header);
  for (const auto& s : r.steps) {
    std::vector<double> row = {s.t};
    for (int i = 0; i < LpnState::kSize; ++i) row.push_back(s.lpn[i]);
    row.insert(row.end(), {s.boundary.p_la_in, s.boundary.p_ra_in, s.boundary.p_ao_out,
                           s.boundary.p_pa_out, s.pressures.p_la, s.pressures.p_lv,
                           s.pressures.p_ra, s.pressures.p_rv});
    row.insert(row.end(), s.volumes.begin(), s.volumes.end());
    for (auto st : s.valve_states) row.push_back(static_cast<double>(static_cast<int>(st)));
    row.insert(row.end(), s.edge_flows.begin(), s.edge_flows.end());
    w.row(row);
  }
}

void write_events_csv(const std::string& path, const SimulationResult& r) {
  csv::Writer w(path);
  w.header({"valve", "transition", "time", "cycle", "cycle_percent"});
  for (const auto& e : r.events)
    w.cells({to_string(e.valve), std::string(to_string(e.from)) + "->" + to_string(e.to),
             csv::format_number(e.t), std::to_string(e.cycle), csv::format_number(e.cycle_percent)});
}

void write_pv_loop_csv(const std::string& path, const SimulationResult& r, Chamber c) {
  csv::Writer w(path);
  w.header({"time", "volume", "pressure"});
  const int i = static_cast<int>(c);
  for (const auto& s : r.steps) w.row({s.t, s.volumes[i], s.pressures[c]});
}

}  // namespace heartflow::heartnet
