#include "heartflow/heartnet/calibrate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "heartflow/csv.hpp"

namespace heartflow::heartnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double bounded(double v, const std::vector<double>& lo, const std::vector<double>& hi, std::size_t i) {
  if (!lo.empty()) v = std::max(v, lo[i]);
  if (!hi.empty()) v = std::min(v, hi[i]);
  return v;
}

}  // namespace

CoordinateDescentResult coordinate_descent(const std::function<double(const std::vector<double>&)>& f,
                                           std::vector<double> x0, const std::vector<double>& lower_b,
                                           const std::vector<double>& upper_b,
                                           const CoordinateDescentOptions& opt) {
  for (double v : x0)
    if (!(v > 0.0)) throw std::invalid_argument("coordinate_descent: parameters must be positive");
  if ((!lower_b.empty() && lower_b.size() != x0.size()) ||
      (!upper_b.empty() && upper_b.size() != x0.size()))
    throw std::invalid_argument("coordinate_descent: bounds size mismatch");

  CoordinateDescentResult res;
  res.x = std::move(x0);
  res.objective = f(res.x);
  res.evaluations = 1;
  double step = opt.initial_step;

  while (res.evaluations < opt.max_evaluations && res.objective > opt.tolerance) {
    bool improved = false;
    for (std::size_t i = 0; i < res.x.size() && res.evaluations < opt.max_evaluations; ++i) {
      auto up = res.x, down = res.x;
      up[i] = bounded(res.x[i] * std::exp(step), lower_b, upper_b, i);
      down[i] = bounded(res.x[i] * std::exp(-step), lower_b, upper_b, i);
      double f_up, f_down;
      if (opt.parallel_probes) {
        auto a = std::async(std::launch::async, [&] { return f(up); });
        f_down = f(down);
        f_up = a.get();
      } else {
        f_up = f(up);
        f_down = f(down);
      }
      res.evaluations += 2;
      if (f_up < res.objective && f_up <= f_down) {
        res.x = up;
        res.objective = f_up;
        improved = true;
      } else if (f_down < res.objective) {
        res.x = down;
        res.objective = f_down;
        improved = true;
      }
      if (res.objective <= opt.tolerance) break;
    }
    if (!improved) {
      step *= 0.5;
      if (step < opt.min_step) break;
    }
  }
  res.converged = res.objective <= opt.tolerance;
  return res;
}

const char* to_string(Site s) {
  switch (s) {
    case Site::LA: return "LA";
    case Site::LV: return "LV";
    case Site::RA: return "RA";
    case Site::RV: return "RV";
    case Site::Aorta: return "AO";
    case Site::PulmonaryArtery: return "PA";
  }
  return "?";
}

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::SystolicMax: return "systolic";
    case Statistic::DiastolicMin: return "diastolic";
    case Statistic::CycleMean: return "mean";
  }
  return "?";
}

Site site_from_string(const std::string& s) {
  const auto l = lower(s);
  if (l == "la") return Site::LA;
  if (l == "lv") return Site::LV;
  if (l == "ra") return Site::RA;
  if (l == "rv") return Site::RV;
  if (l == "ao" || l == "aorta") return Site::Aorta;
  if (l == "pa") return Site::PulmonaryArtery;
  throw std::invalid_argument("unknown pressure site '" + s + "' (la, lv, ra, rv, ao, pa)");
}

Statistic statistic_from_string(const std::string& s) {
  const auto l = lower(s);
  if (l == "systolic" || l == "max") return Statistic::SystolicMax;
  if (l == "diastolic" || l == "min") return Statistic::DiastolicMin;
  if (l == "mean") return Statistic::CycleMean;
  throw std::invalid_argument("unknown statistic '" + s + "' (systolic, diastolic, mean)");
}

double site_pressure(const StepRecord& s, Site site) {
  switch (site) {
    case Site::LA: return s.pressures.p_la;
    case Site::LV: return s.pressures.p_lv;
    case Site::RA: return s.pressures.p_ra;
    case Site::RV: return s.pressures.p_rv;
    case Site::Aorta: return s.boundary.p_ao_out;
    case Site::PulmonaryArtery: return s.boundary.p_pa_out;
  }
  return 0.0;
}

double measure(const SimulationResult& r, int k, Site site, Statistic stat) {
  const auto [lo, hi] = r.cycle_range(k);
  if (hi <= lo + 1) throw std::invalid_argument("measure: cycle not simulated");
  double mx = -kInf, mn = kInf, acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double p = site_pressure(r.steps[i], site);
    mx = std::max(mx, p);
    mn = std::min(mn, p);
    acc += p;
  }
  switch (stat) {
    case Statistic::SystolicMax: return mx;
    case Statistic::DiastolicMin: return mn;
    case Statistic::CycleMean: return acc / static_cast<double>(hi - lo);
  }
  return 0.0;
}

double& parameter_ref(const std::string& name, circuit::LpnParameters& p, HeartNetwork& net) {
  const auto n = lower(name);
  if (n == "r_ar_sys") return p.r_ar_sys;
  if (n == "r_ven_sys") return p.r_ven_sys;
  if (n == "r_ar_pul") return p.r_ar_pul;
  if (n == "r_ven_pul") return p.r_ven_pul;
  if (n == "c_ar_sys") return p.c_ar_sys;
  if (n == "c_ven_sys") return p.c_ven_sys;
  if (n == "c_ar_pul") return p.c_ar_pul;
  if (n == "c_ven_pul") return p.c_ven_pul;
  if (n == "l_ar_sys") return p.l_ar_sys;
  if (n == "l_ven_sys") return p.l_ven_sys;
  if (n == "l_ar_pul") return p.l_ar_pul;
  if (n == "l_ven_pul") return p.l_ven_pul;
  if (n == "r_min") return p.r_min;
  const auto dot = n.find('.');
  if (dot != std::string::npos) {
    const auto owner = n.substr(0, dot), field = n.substr(dot + 1);
    for (int v = 0; v < kValveCount; ++v) {
      if (owner != lower(to_string(static_cast<ValveId>(v)))) continue;
      if (field == "r_open") return net.valves[v].r_open;
      if (field == "r_closed") return net.valves[v].r_closed;
    }
    for (auto& s : net.shunts)
      if (owner == lower(s.name) && field == "resistance") return s.resistance;
  }
  throw std::invalid_argument("unknown free parameter '" + name + "'");
}

CalibrationResult calibrate(const HeartNetwork& net, const circuit::LpnParameters& params,
                            const circuit::LpnState& init, const std::vector<PressureTarget>& targets,
                            const std::vector<std::string>& free_parameters,
                            const CalibrationOptions& options) {
  if (targets.empty()) throw std::invalid_argument("calibrate: no targets");
  for (const auto& t : targets)
    if (!(t.value != 0.0 && std::isfinite(t.value)) || !(t.weight >= 0.0))
      throw std::invalid_argument("calibrate: targets need a finite non-zero value and weight >= 0");
  if (options.cycles < 1) throw std::invalid_argument("calibrate: cycles must be >= 1");
  const double dt = options.dt > 0.0 ? options.dt : net.period() / 1000.0;

  // Resolve names up front so typos fail before any simulation runs.
  {
    auto p = params;
    auto n = net;
    for (const auto& name : free_parameters) (void)parameter_ref(name, p, n);
  }

  auto apply = [&](const std::vector<double>& x, circuit::LpnParameters& p, HeartNetwork& n) {
    for (std::size_t i = 0; i < x.size(); ++i) parameter_ref(free_parameters[i], p, n) = x[i];
  };
  auto residuals = [&](const SimulationResult& r) {
    std::vector<TargetResidual> out;
    const int last = r.cycles() - 1;
    for (const auto& t : targets) {
      const double sim = measure(r, last, t.site, t.statistic);
      out.push_back({t, sim, (sim - t.value) / t.value});
    }
    return out;
  };
  auto objective_of = [](const std::vector<TargetResidual>& res) {
    double f = 0.0;
    for (const auto& r : res) f += r.target.weight * r.relative_error * r.relative_error;
    return f;
  };
  auto evaluate = [&](const std::vector<double>& x) {
    auto p = params;
    auto n = net;
    try {
      apply(x, p, n);
      const auto r = simulate(n, p, init, options.cycles, dt);
      const double f = objective_of(residuals(r));
      return std::isfinite(f) ? f : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  std::vector<double> x0;
  {
    auto p = params;
    auto n = net;
    for (const auto& name : free_parameters) x0.push_back(parameter_ref(name, p, n));
  }

  CalibrationResult out;
  out.free_parameters = free_parameters;
  CoordinateDescentResult cd;
  if (free_parameters.empty()) {
    cd.x = {};
    cd.objective = evaluate({});
    cd.evaluations = 1;
    cd.converged = cd.objective <= options.search.tolerance;
  } else {
    cd = coordinate_descent(evaluate, x0, {}, {}, options.search);
  }
  out.params = params;
  out.net = net;
  apply(cd.x, out.params, out.net);
  out.values = cd.x;
  out.evaluations = cd.evaluations;
  out.converged = cd.converged;
  out.objective = cd.objective;
  if (std::isfinite(cd.objective)) {
    out.residuals = residuals(simulate(out.net, out.params, init, options.cycles, dt));
    out.objective = objective_of(out.residuals);
  }
  return out;
}

void write_residuals_csv(const std::string& path, const CalibrationResult& r) {
  csv::Writer w(path);
  w.header({"site", "statistic", "target", "weight", "simulated", "relative_error"});
  for (const auto& x : r.residuals)
    w.cells({to_string(x.target.site), to_string(x.target.statistic), csv::format_number(x.target.value),
             csv::format_number(x.target.weight), csv::format_number(x.simulated),
             csv::format_number(x.relative_error)});
}

}  // namespace heartflow::heartnet
