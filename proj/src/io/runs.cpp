#include "heartflow/io/runs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "heartflow/contact.hpp"
#include "heartflow/csv.hpp"
#include "heartflow/geometry/ris.hpp"
#include "heartflow/geometry/sdf.hpp"
#include "heartflow/io/svg.hpp"
#include "json.hpp"

#ifndef HEARTFLOW_VERSION
#define HEARTFLOW_VERSION "unknown"
#endif

namespace heartflow::io {

namespace {

namespace fs = std::filesystem;
using csv::format_number;
using geometry::Vec3;
using heartnet::Chamber;
using heartnet::Site;
using heartnet::Statistic;

constexpr std::array<Chamber, 4> kChambers = {Chamber::LA, Chamber::LV, Chamber::RA, Chamber::RV};

/// Output directory bookkeeping shared by every pipeline.
class RunContext {
 public:
  RunContext(std::string command, const ScenarioConfig& config)
      : command_(std::move(command)), config_(config), dir_(config.output_dir),
        start_(std::chrono::steady_clock::now()) {
    config.validate();
    fs::create_directories(dir_);
    std::ofstream out(path("config.cfg"), std::ios::binary);
    out << to_ini(config);
    if (!out) throw RunError(command_ + ": cannot write config.cfg in " + dir_.string());
  }

  /// Full path of an output file, registered for the manifest.
  std::string path(const std::string& name) {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    return (dir_ / name).string();
  }

  const std::string& command() const { return command_; }

  RunManifest finish() {
    RunManifest m;
    m.command = command_;
    m.config_hash = sha256_hex(to_ini(config_));
    m.code_version = code_version();
    m.seed = config_.seed;
    m.output_dir = dir_.string();
    std::sort(names_.begin(), names_.end());
    for (const auto& n : names_) {
      const auto p = (dir_ / n).string();
      m.outputs.push_back({n, file_sha256(p), fs::file_size(p)});
    }
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(m);
    return m;
  }

 private:
  std::string command_;
  const ScenarioConfig& config_;
  fs::path dir_;
  std::vector<std::string> names_;
  std::chrono::steady_clock::time_point start_;
};

std::string flag(bool b) { return b ? "1" : "0"; }

void write_state_csv(const std::string& path, const heartnet::SimulationResult& r) {
  csv::Writer w(path);
  std::vector<std::string> header = {"time"};
  for (int i = 0; i < circuit::LpnState::kSize; ++i) header.push_back(circuit::LpnState::name(i));
  w.header(header);
  for (const auto& s : r.steps) {
    std::vector<double> row = {s.t};
    for (int i = 0; i < circuit::LpnState::kSize; ++i) row.push_back(s.lpn[i]);
    w.row(row);
  }
}

void write_chamber_pressures_csv(const std::string& path, const heartnet::SimulationResult& r) {
  csv::Writer w(path);
  w.header({"time", "p_la", "p_lv", "p_ra", "p_rv", "p_ao", "p_pa"});
  for (const auto& s : r.steps)
    w.row({s.t, s.pressures.p_la, s.pressures.p_lv, s.pressures.p_ra, s.pressures.p_rv, s.boundary.p_ao_out,
           s.boundary.p_pa_out});
}

void write_cycles_csv(const std::string& path, const heartnet::SimulationResult& r) {
  csv::Writer w(path);
  w.header({"cycle", "periodicity_error", "lv_systolic", "rv_systolic", "ao_systolic", "ao_diastolic",
            "pa_systolic", "pa_diastolic", "la_mean", "ra_mean"});
  for (int k = 0; k < r.cycles(); ++k) {
    const auto [lo, hi] = r.cycle_range(k);
    if (hi <= lo + 1) continue;
    auto m = [&](Site s, Statistic st) { return format_number(heartnet::measure(r, k, s, st)); };
    w.cells({std::to_string(k), k > 0 ? format_number(heartnet::cycle_periodicity_error(r, k)) : "",
             m(Site::LV, Statistic::SystolicMax), m(Site::RV, Statistic::SystolicMax),
             m(Site::Aorta, Statistic::SystolicMax), m(Site::Aorta, Statistic::DiastolicMin),
             m(Site::PulmonaryArtery, Statistic::SystolicMax), m(Site::PulmonaryArtery, Statistic::DiastolicMin),
             m(Site::LA, Statistic::CycleMean), m(Site::RA, Statistic::CycleMean)});
  }
}

void plot_pressures(const std::string& path, const heartnet::SimulationResult& r, const std::string& title) {
  svg::Plot p{title, "time [s]", "pressure [mmHg]", {}};
  const char* names[] = {"LA", "LV", "RA", "RV", "AO", "PA"};
  for (int c = 0; c < 6; ++c) {
    svg::Series s{names[c], {}, {}};
    for (const auto& st : r.steps) {
      s.x.push_back(st.t);
      s.y.push_back(c < 4 ? st.pressures[kChambers[c]] : c == 4 ? st.boundary.p_ao_out : st.boundary.p_pa_out);
    }
    p.series.push_back(std::move(s));
  }
  svg::write(path, p);
}

void plot_pv_loops(const std::string& path, const heartnet::SimulationResult& r) {
  svg::Plot p{"Pressure-volume loops, last cycle", "volume [mL]", "pressure [mmHg]", {}};
  const auto [lo, hi] = r.cycle_range(r.cycles() - 1);
  for (Chamber c : kChambers) {
    svg::Series s{heartnet::to_string(c), {}, {}};
    for (std::size_t i = lo; i < hi; ++i) {
      s.x.push_back(r.steps[i].volumes[static_cast<int>(c)]);
      s.y.push_back(r.steps[i].pressures[c]);
    }
    p.series.push_back(std::move(s));
  }
  svg::write(path, p);
}

heartnet::SimulationResult simulate_or_throw(const std::string& command, const heartnet::HeartNetwork& net,
                                             const circuit::LpnParameters& lpn, const circuit::LpnState& init,
                                             int cycles, double dt) {
  try {
    return heartnet::simulate(net, lpn, init, cycles, dt);
  } catch (const std::exception& e) {
    throw RunError(command + ": " + e.what());
  }
}

geometry::TriangleMesh shape(const std::string& spec, double radius, int subdivisions) {
  if (spec == "sphere") return geometry::make_icosphere(radius, subdivisions);
  if (spec == "box") return geometry::make_box(Vec3::Constant(-radius), Vec3::Constant(radius));
  return geometry::read_mesh(spec);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, item.find_last_not_of(' ') - b + 1));
  }
  return out;
}

/// Regular grid through a point cloud; `order[g]` is the input index of
/// grid node g.
energetics::GridSpec infer_grid(const std::vector<Vec3>& pts, std::vector<std::size_t>& order) {
  energetics::GridSpec g;
  std::array<double, 3> lo{}, h{};
  for (int a = 0; a < 3; ++a) {
    std::vector<double> v;
    for (const auto& p : pts) v.push_back(p[a]);
    std::sort(v.begin(), v.end());
    const double tol = 1e-9 * std::max(1.0, v.back() - v.front());
    v.erase(std::unique(v.begin(), v.end(), [&](double x, double y) { return y - x <= tol; }), v.end());
    lo[a] = v.front();
    h[a] = v.size() > 1 ? (v.back() - v.front()) / static_cast<double>(v.size() - 1) : 1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i] - (lo[a] + static_cast<double>(i) * h[a])) > 1e-6 * h[a])
        throw std::invalid_argument("velocity samples are not on a uniformly spaced grid (axis " +
                                    std::to_string(a) + ")");
    g.dims[a] = static_cast<int>(v.size());
  }
  g.origin = {lo[0], lo[1], lo[2]};
  g.spacing = {h[0], h[1], h[2]};
  if (g.count() != pts.size())
    throw std::invalid_argument("velocity samples do not fill a regular grid: " + std::to_string(pts.size()) +
                                " rows for " + std::to_string(g.count()) + " nodes");
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  order.assign(g.count(), kUnset);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::array<int, 3> ijk{};
    for (int a = 0; a < 3; ++a) ijk[a] = static_cast<int>(std::lround((pts[i][a] - lo[a]) / h[a]));
    auto& slot = order[g.index(ijk[0], ijk[1], ijk[2])];
    if (slot != kUnset) throw std::invalid_argument("duplicate velocity sample at row " + std::to_string(i + 2));
    slot = i;
  }
  return g;
}

/// Grid node index of a position, or -1 when it does not sit on a node.
long grid_node(const energetics::GridSpec& g, const Vec3& x) {
  std::array<int, 3> ijk{};
  for (int a = 0; a < 3; ++a) {
    const double f = (x[a] - g.origin[a]) / g.spacing[a];
    ijk[a] = static_cast<int>(std::lround(f));
    if (std::abs(f - ijk[a]) > 1e-6 || ijk[a] < 0 || ijk[a] >= g.dims[a]) return -1;
  }
  return static_cast<long>(g.index(ijk[0], ijk[1], ijk[2]));
}

}  // namespace

const char* code_version() { return HEARTFLOW_VERSION; }

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void write_manifest(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["code_version"] = m.code_version;
  j["config"] = "config.cfg";
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["wall_clock_s"] = m.wall_clock_s;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& f : m.outputs) j["outputs"].push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  std::ofstream out((fs::path(m.output_dir) / "manifest.json").string(), std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) throw RunError(m.command + ": cannot write manifest.json");
}

RunManifest run_simulate(const ScenarioConfig& config) {
  RunContext ctx("simulate", config);
  const auto& s = config.scenario;
  const auto r = simulate_or_throw(ctx.command(), s.net, s.lpn, s.initial, s.cycles, s.dt);
  write_state_csv(ctx.path("state.csv"), r);
  write_chamber_pressures_csv(ctx.path("chamber_pressures.csv"), r);
  heartnet::write_events_csv(ctx.path("valve_events.csv"), r);
  heartnet::write_timeseries_csv(ctx.path("timeseries.csv"), r);
  write_cycles_csv(ctx.path("cycles.csv"), r);
  for (Chamber c : kChambers) {
    std::string name = heartnet::to_string(c);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    heartnet::write_pv_loop_csv(ctx.path("pv_" + name + ".csv"), r, c);
  }
  if (config.plots) {
    plot_pressures(ctx.path("pressures.svg"), r, "Chamber and arterial pressures (" + config.topology + ")");
    plot_pv_loops(ctx.path("pv_loops.svg"), r);
  }
  return ctx.finish();
}

RunManifest run_calibrate(const ScenarioConfig& config) {
  RunContext ctx("calibrate", config);
  const auto& s = config.scenario;
  const auto& cal = config.calibrate;
  if (cal.targets.empty()) throw RunError("calibrate: the configuration has no [target.*] sections");
  if (cal.free_parameters.empty()) throw RunError("calibrate: [calibrate] free lists no parameters");
  auto options = cal.options;
  if (options.dt <= 0.0) options.dt = s.dt;

  const auto res = heartnet::calibrate(s.net, s.lpn, s.initial, cal.targets, cal.free_parameters, options);
  if (res.residuals.empty())
    throw RunError("calibrate: every probe failed to simulate (objective " + format_number(res.objective) + ")");
  heartnet::write_residuals_csv(ctx.path("residuals.csv"), res);
  {
    csv::Writer w(ctx.path("parameters.csv"));
    w.header({"parameter", "initial", "calibrated"});
    auto lpn = s.lpn;
    auto net = s.net;
    for (std::size_t i = 0; i < res.free_parameters.size(); ++i)
      w.cells({res.free_parameters[i], format_number(heartnet::parameter_ref(res.free_parameters[i], lpn, net)),
               format_number(res.values[i])});
  }
  {
    csv::Writer w(ctx.path("summary.csv"));
    w.header({"objective", "evaluations", "converged"});
    w.cells({format_number(res.objective), std::to_string(res.evaluations), flag(res.converged)});
  }
  auto calibrated = config;
  calibrated.scenario.lpn = res.params;
  calibrated.scenario.net = res.net;
  {
    std::ofstream out(ctx.path("calibrated.cfg"), std::ios::binary);
    out << to_ini(calibrated);
  }
  const auto r = simulate_or_throw(ctx.command(), res.net, res.params, s.initial, options.cycles, options.dt);
  write_chamber_pressures_csv(ctx.path("calibrated_pressures.csv"), r);
  if (config.plots) plot_pressures(ctx.path("calibrated_pressures.svg"), r, "Calibrated pressures");
  return ctx.finish();
}

RunManifest run_register(const ScenarioConfig& config) {
  RunContext ctx("register", config);
  const auto& rc = config.registration;
  registration::RegistrationProblem problem;
  problem.baseline = shape(rc.baseline, rc.radius, rc.subdivisions);
  if (rc.targets == "translate") {
    for (int k = 1; k <= rc.frames; ++k) {
      auto t = problem.baseline;
      for (auto& v : t.vertices) v += static_cast<double>(k) * rc.offset;
      problem.targets.push_back(std::move(t));
    }
  } else {
    for (const auto& f : split_list(rc.targets)) problem.targets.push_back(geometry::read_mesh(f));
  }
  problem.options = rc.options;
  problem.seed = config.seed;
  problem.validate();

  auto weights = rc.weights;
  try {
    if (rc.weight_samples > 0) {
      const auto ws = registration::weight_search(problem, rc.weight_samples, config.seed, rc.search_iterations);
      csv::Writer w(ctx.path("weight_search.csv"));
      w.header({"sample", "w_point", "w_normal", "w_arap", "mean_chamfer_rms", "arap", "converged", "best"});
      for (std::size_t i = 0; i < ws.entries.size(); ++i) {
        const auto& e = ws.entries[i];
        w.cells({std::to_string(i), format_number(e.weights.point), format_number(e.weights.normal),
                 format_number(e.weights.arap), format_number(e.mean_chamfer), format_number(e.arap),
                 flag(e.converged), flag(i == ws.best)});
      }
      weights = ws.entries[ws.best].weights;
    }
    const auto tr = registration::train(problem, weights);
    registration::write_trace_csv(ctx.path("trace.csv"), tr.trace);
    {
      csv::Writer w(ctx.path("frames.csv"));
      w.header({"frame", "vertex", "x", "y", "z"});
      const auto base = registration::to_points(problem.baseline.vertices);
      for (std::size_t f = 0; f <= tr.frames.size(); ++f) {
        const auto& p = f == 0 ? base : tr.frames[f - 1];
        for (Eigen::Index i = 0; i < p.cols(); ++i)
          w.row({static_cast<double>(f), static_cast<double>(i), p(0, i), p(1, i), p(2, i)});
      }
    }
    for (std::size_t f = 0; f < tr.frames.size(); ++f) {
      auto m = problem.baseline;
      m.vertices = registration::from_points(tr.frames[f]);
      geometry::write_mesh(ctx.path("frame_" + std::to_string(f + 1) + ".mesh"), m);
    }
    const auto crossing = registration::check_non_crossing(tr.model, registration::to_points(problem.baseline.vertices));
    {
      csv::Writer w(ctx.path("summary.csv"));
      w.header({"module", "iterations", "final_chamfer_rms", "reached_tolerance", "w_point", "w_normal", "w_arap"});
      for (std::size_t m = 0; m < tr.iterations.size(); ++m)
        w.cells({std::to_string(m), std::to_string(tr.iterations[m]), format_number(tr.final_chamfer[m]),
                 flag(tr.final_chamfer[m] <= problem.options.chamfer_tolerance), format_number(weights.point),
                 format_number(weights.normal), format_number(weights.arap)});
    }
    {
      csv::Writer w(ctx.path("crossing.csv"));
      w.header({"violations", "first_module", "first_step", "first_vertex"});
      w.row({static_cast<double>(crossing.violations), static_cast<double>(crossing.first_module),
             static_cast<double>(crossing.first_step), static_cast<double>(crossing.first_vertex)});
    }
    if (config.plots) {
      svg::Plot p{"Registration losses", "iteration", "value", {}};
      svg::Series total{"total", {}, {}}, chamfer{"Chamfer RMS", {}, {}};
      for (std::size_t i = 0; i < tr.trace.size(); ++i) {
        total.x.push_back(static_cast<double>(i));
        total.y.push_back(tr.trace[i].loss.total);
        chamfer.x.push_back(static_cast<double>(i));
        chamfer.y.push_back(tr.trace[i].chamfer_rms);
      }
      p.series = {total, chamfer};
      svg::write(ctx.path("losses.svg"), p);
    }
  } catch (const registration::RegistrationError& e) {
    throw RunError("register: " + std::string(e.what()));
  }
  return ctx.finish();
}

RunManifest run_sdf(const ScenarioConfig& config) {
  RunContext ctx("sdf", config);
  const auto& sc = config.sdf;
  const auto mesh = shape(sc.mesh, sc.radius, sc.subdivisions);
  const geometry::MeshDistance tree(mesh);
  const auto points = geometry::grid_points(sc.lo, sc.hi, sc.samples);
  geometry::SdfCache cache;
  const auto& field = cache.get(sc.mesh, sc.valve_state,
                                [&] { return geometry::signed_distance(tree, points, sc.epsilon, sc.mesh); });
  const auto regions = geometry::classify_regions(field);
  {
    csv::Writer w(ctx.path("sdf.csv"));
    w.header({"x", "y", "z", "phi", "delta", "region", "inside_valve"});
    for (std::size_t i = 0; i < points.size(); ++i)
      w.cells({format_number(points[i].x()), format_number(points[i].y()), format_number(points[i].z()),
               format_number(field.values[i]), format_number(geometry::smoothed_delta(field.values[i], sc.epsilon)),
               geometry::to_string(regions.labels[i]), flag(regions.inside_valve[i])});
  }
  {
    std::array<int, 4> counts{};
    for (auto r : regions.labels) ++counts[static_cast<int>(r)];
    csv::Writer w(ctx.path("summary.csv"));
    w.header({"mesh", "vertices", "faces", "signed", "volume", "samples", "upstream", "downstream", "band", "far"});
    w.cells({sc.mesh, std::to_string(mesh.vertices.size()), std::to_string(mesh.faces.size()), flag(field.is_signed),
             tree.closed() ? format_number(geometry::enclosed_volume(mesh)) : "", std::to_string(points.size()),
             std::to_string(counts[0]), std::to_string(counts[1]), std::to_string(counts[2]),
             std::to_string(counts[3])});
  }
  if (config.plots) {
    // Profile along x through the middle row of the grid.
    const int j = sc.samples[1] / 2, k = sc.samples[2] / 2;
    svg::Series phi{"phi", {}, {}}, delta{"delta", {}, {}};
    for (int i = 0; i < sc.samples[0]; ++i) {
      const std::size_t idx = static_cast<std::size_t>(i + sc.samples[0] * (j + sc.samples[1] * k));
      phi.x.push_back(points[idx].x());
      phi.y.push_back(field.values[idx]);
      delta.x.push_back(points[idx].x());
      delta.y.push_back(geometry::smoothed_delta(field.values[idx], sc.epsilon));
    }
    svg::write(ctx.path("sdf_profile.svg"), {"Signed distance along x", "x", "value", {phi, delta}});
  }
  return ctx.finish();
}

std::vector<std::pair<double, energetics::SampledVelocityField>> read_velocity_csv(const std::string& path,
                                                                                  double rho, double mu) {
  const auto t = csv::read(path);
  std::array<std::size_t, 6> col{};
  const char* names[] = {"x", "y", "z", "u", "v", "w"};
  for (int i = 0; i < 6; ++i) col[i] = t.column(names[i]);
  const bool timed = t.has_column("t");
  const std::size_t tc = timed ? t.column("t") : 0;

  std::map<double, std::size_t> frame_of;
  std::vector<double> times;
  std::vector<std::vector<std::size_t>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double time = timed ? t.number(r, tc) : 0.0;
    auto [it, added] = frame_of.emplace(time, times.size());
    if (added) {
      times.push_back(time);
      rows.emplace_back();
    }
    rows[it->second].push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no velocity samples");

  std::vector<std::pair<double, energetics::SampledVelocityField>> frames;
  for (std::size_t f = 0; f < rows.size(); ++f) {
    std::vector<Vec3> pts, vel;
    for (auto r : rows[f]) {
      pts.emplace_back(t.number(r, col[0]), t.number(r, col[1]), t.number(r, col[2]));
      vel.emplace_back(t.number(r, col[3]), t.number(r, col[4]), t.number(r, col[5]));
    }
    std::vector<std::size_t> order;
    energetics::GridSpec g;
    try {
      g = infer_grid(pts, order);
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ", t = " + format_number(times[f]) + ": " + e.what());
    }
    std::vector<Vec3> ordered(order.size());
    for (std::size_t n = 0; n < order.size(); ++n) ordered[n] = vel[order[n]];
    frames.emplace_back(times[f], energetics::SampledVelocityField::on_grid(g, std::move(ordered), rho, mu));
  }
  return frames;
}

energetics::ChamberMask read_mask_csv(const std::string& path, const energetics::SampledVelocityField& field) {
  if (!field.grid) throw std::invalid_argument("mask: field has no grid");
  const auto t = csv::read(path);
  const auto cx = t.column("x"), cy = t.column("y"), cz = t.column("z"), ci = t.column("inside");
  std::vector<bool> inside(field.size(), false);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const Vec3 x(t.number(r, cx), t.number(r, cy), t.number(r, cz));
    const long n = grid_node(*field.grid, x);
    if (n < 0) throw std::invalid_argument(path + ": row " + std::to_string(r + 2) + " is not a grid node");
    inside[static_cast<std::size_t>(n)] = t.number(r, ci) != 0.0;
  }
  return energetics::make_mask(field, [&](const Vec3& x) {
    const long n = grid_node(*field.grid, x);
    return n >= 0 && inside[static_cast<std::size_t>(n)];
  });
}

RunManifest run_energetics(const ScenarioConfig& config) {
  RunContext ctx("energetics", config);
  const auto& ec = config.energetics;
  std::vector<std::pair<double, energetics::SampledVelocityField>> frames;
  const bool synthetic = ec.field == "synthetic";
  const Vec3 centre(0.5, 0.5, 0.5);
  if (synthetic) {
    // Pulsatile shear with a superposed swirl in a unit box (cm).
    energetics::GridSpec g;
    g.origin = Vec3::Zero();
    g.spacing = Vec3::Constant(0.1);
    g.dims = {11, 11, 11};
    const double period = config.scenario.period;
    for (int n = 0; n < ec.synthetic_steps; ++n) {
      const double t = period * n / ec.synthetic_steps;
      const double a = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t / period);
      const double gamma = ec.synthetic_shear;
      const Vec3 omega(0.0, 0.0, 0.25 * gamma);
      frames.emplace_back(t, energetics::SampledVelocityField::on_grid(
                                 g,
                                 [&](const Vec3& x) {
                                   return Vec3(a * (Vec3(gamma * (x.y() - 0.5), 0.0, 0.0) + omega.cross(x - centre)));
                                 },
                                 ec.rho, ec.mu));
    }
  } else {
    frames = read_velocity_csv(ec.field, ec.rho, ec.mu);
  }

  csv::Writer w(ctx.path("energetics.csv"));
  w.header({"time", "ke_mean", "dissipation_mean", "ratio"});
  svg::Series ratio{"dissipation / KE", {}, {}};
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& [t, field] = frames[f];
    energetics::ChamberMask mask;
    if (!ec.mask.empty())
      mask = read_mask_csv(ec.mask, field);
    else if (synthetic)
      mask = energetics::make_mask(field, [&](const Vec3& x) { return (x - centre).norm() <= 0.45; });
    else
      mask = energetics::make_mask(field, [](const Vec3&) { return true; });
    energetics::EnergeticsSample s;
    try {
      s = energetics::chamber_energetics(t, field, mask);
    } catch (const std::exception& e) {
      throw RunError("energetics: frame " + std::to_string(f) + " (t = " + format_number(t) + "): " + e.what());
    }
    w.cells({format_number(s.t), format_number(s.ke_mean), format_number(s.dissipation_mean),
             s.ratio ? format_number(*s.ratio) : ""});
    ratio.x.push_back(s.t);
    ratio.y.push_back(s.ratio ? *s.ratio : std::nan(""));
  }
  if (config.plots)
    svg::write(ctx.path("energetics.svg"), {"Volume-normalized dissipation", "time [s]", "ratio [1/s]", {ratio}});
  return ctx.finish();
}

RunManifest run_contact_demo(const ScenarioConfig& config) {
  RunContext ctx("contact-demo", config);
  const auto& cc = config.contact;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), weight(0.5, 1.5);
  const double reach = cc.penalty.h > 0.0 ? cc.penalty.h : 0.1;
  std::uniform_real_distribution<double> depth(-2.0 * reach, reach);
  std::vector<contact::ContactPointPair> pairs;
  for (int i = 0; i < cc.pairs; ++i) {
    contact::ContactPointPair p;
    p.x1 = {unit(rng), unit(rng), unit(rng)};
    Vec3 n;
    do n = {unit(rng), unit(rng), unit(rng)};
    while (n.norm() < 0.1 || n.norm() > 1.0);
    p.n2 = n.normalized();
    p.x2 = p.x1 + depth(rng) * p.n2;
    p.w = weight(rng);
    pairs.push_back(p);
  }
  const auto forces = contact::contact_forces(pairs, cc.penalty);
  {
    csv::Writer w(ctx.path("contact_forces.csv"));
    w.header({"pair", "penetration", "penalty", "weight", "f1_x", "f1_y", "f1_z", "f2_x", "f2_y", "f2_z"});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double d = contact::penetration(pairs[i]);
      const auto& f = forces[i];
      w.row({static_cast<double>(i), d, contact::penalty_magnitude(d, cc.penalty), pairs[i].w, f.f1.x(), f.f1.y(),
             f.f1.z(), f.f2.x(), f.f2.y(), f.f2.z()});
    }
  }
  {
    const Vec3 net = contact::net_force(forces);
    csv::Writer w(ctx.path("contact_summary.csv"));
    w.header({"pairs", "active", "net_x", "net_y", "net_z"});
    const auto active = std::count_if(forces.begin(), forces.end(), [](const auto& f) { return f.f1 != Vec3::Zero(); });
    w.row({static_cast<double>(pairs.size()), static_cast<double>(active), net.x(), net.y(), net.z()});
  }
  if (config.plots) {
    svg::Series pen{"penalty", {}, {}};
    for (int i = 0; i <= 200; ++i) {
      const double d = -2.0 * reach + 3.0 * reach * i / 200.0;
      pen.x.push_back(d);
      pen.y.push_back(contact::penalty_magnitude(d, cc.penalty));
    }
    svg::write(ctx.path("penalty.svg"), {"Contact penalty map", "penetration d", "penalty", {pen}});
  }
  return ctx.finish();
}

}  // namespace heartflow::io
