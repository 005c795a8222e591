#include "heartflow/registration/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "heartflow/csv.hpp"

namespace heartflow::registration {

RegistrationError::RegistrationError(int module, int iteration, const std::string& what)
    : std::runtime_error("module " + std::to_string(module) + ", iteration " + std::to_string(iteration) +
                         ": " + what),
      module_(module),
      iteration_(iteration) {}

PointSet to_points(const std::vector<geometry::Vec3>& v) {
  PointSet p(3, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = v[i];
  return p;
}

std::vector<geometry::Vec3> from_points(const PointSet& p) {
  std::vector<geometry::Vec3> v(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.cols(); ++i) v[static_cast<std::size_t>(i)] = p.col(i);
  return v;
}

void RegistrationProblem::validate() const {
  baseline.validate();
  if (baseline.vertices.empty() || baseline.faces.empty())
    throw std::invalid_argument("registration: baseline mesh is empty");
  if (targets.empty()) throw std::invalid_argument("registration: no target meshes");
  for (const auto& t : targets) {
    t.validate();
    if (t.vertices.empty() || t.faces.empty()) throw std::invalid_argument("registration: empty target mesh");
  }
  if (options.max_iterations < 0 || !(options.learning_rate > 0.0) || !(options.chamfer_tolerance >= 0.0) ||
      options.width < 1)
    throw std::invalid_argument("registration: invalid training options");
}

ModuleObjective::ModuleObjective(const PointSet& reference, const Faces& faces,
                                 const geometry::TriangleMesh& target, const LossWeights& weights)
    : reference_(reference),
      incident_(incident_edges(faces, static_cast<int>(reference.cols()))),
      neighbours_(cotangent_weights(reference, faces)),
      g_(to_points(target.vertices)),
      g_normals_(vertex_normals(g_, target.faces)),
      g_grid_(g_),
      weights_(weights) {}

ModuleLoss ModuleObjective::evaluate(const PointSet& deformed, bool with_gradient) const {
  ModuleLoss out;
  PointSet gp, gn, ga;
  auto& v = out.value;
  v.point = loss_point(deformed, g_, with_gradient ? &gp : nullptr);
  const auto nl = loss_normal(deformed, incident_, g_, g_normals_, with_gradient ? &gn : nullptr, &g_grid_);
  v.normal = nl.value;
  v.degenerate_normals = nl.degenerate;
  v.arap = loss_arap(reference_, deformed, neighbours_, with_gradient ? &ga : nullptr);
  v.total = loss_total(v.point, v.normal, v.arap, weights_);
  if (!with_gradient) return out;
  // d(prod L_k^l_k) = total * sum l_k dL_k / L_k; floored terms are constant.
  out.grad = PointSet::Zero(3, deformed.cols());
  auto add = [&](double l, double lambda, const PointSet& g) {
    if (lambda > 0.0 && l > kLossFloor) out.grad += (v.total * lambda / l) * g;
  };
  add(v.point, weights_.point, gp);
  add(v.normal, weights_.normal, gn);
  add(v.arap, weights_.arap, ga);
  return out;
}

TrainResult train(const RegistrationProblem& problem, const LossWeights& weights) {
  problem.validate();
  weights.validate();
  const auto& opt = problem.options;
  TrainResult res;
  res.model = make_model(static_cast<int>(problem.targets.size()), problem.seed, opt.width);
  res.converged = true;
  PointSet current = to_points(problem.baseline.vertices);

  for (std::size_t m = 0; m < problem.targets.size(); ++m) {
    const int mi = static_cast<int>(m);
    auto& net = res.model.modules[m];
    const ModuleObjective objective(current, problem.baseline.faces, problem.targets[m], weights);
    const double n_total = static_cast<double>(current.cols() + objective.target_points().cols());

    Eigen::VectorXd theta = net.parameters();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size()), m2 = m1;
    Eigen::VectorXd best_theta = theta;
    double best = std::numeric_limits<double>::infinity();
    int updates = 0;
    bool converged = false;
    for (int it = 0;; ++it) {
      const PointSet p = integrate(net, current);
      const auto loss = objective.evaluate(p);
      if (!std::isfinite(loss.value.total) || !loss.grad.allFinite())
        throw RegistrationError(mi, it, "non-finite loss");
      const double chamfer = std::sqrt(loss.value.point / n_total);
      res.trace.push_back({mi, it, loss.value, chamfer});
      if (chamfer < best) {
        best = chamfer;
        best_theta = theta;
      }
      if (chamfer < opt.chamfer_tolerance) {
        converged = true;
        break;
      }
      if (it == opt.max_iterations) break;

      const Eigen::VectorXd g = integrate_backward(net, current, loss.grad);
      if (!g.allFinite()) throw RegistrationError(mi, it, "non-finite gradient");
      ++updates;
      m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * g;
      m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(opt.beta1, updates), c2 = 1.0 - std::pow(opt.beta2, updates);
      theta.array() -= opt.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + opt.adam_epsilon);
      net.set_parameters(theta);
    }
    net.set_parameters(best_theta);
    current = integrate(net, current);
    res.frames.push_back(current);
    res.iterations.push_back(updates);
    res.final_chamfer.push_back(best);
    res.converged = res.converged && converged;
  }
  return res;
}

WeightSearchResult weight_search(const RegistrationProblem& problem, int samples, std::uint64_t seed,
                                 int iterations) {
  const auto triples = sample_weights(samples, seed);
  RegistrationProblem p = problem;
  p.options.max_iterations = iterations;
  p.validate();
  auto run = [&p](const LossWeights& w) {
    const auto r = train(p, w);
    WeightSearchEntry e;
    e.weights = w;
    for (double c : r.final_chamfer) e.mean_chamfer += c / static_cast<double>(r.final_chamfer.size());
    e.arap = 0.0;
    for (std::size_t m = 0; m < r.frames.size(); ++m) {
      const int module = static_cast<int>(m);
      const auto& last = *std::find_if(r.trace.rbegin(), r.trace.rend(),
                                       [&](const TraceRow& t) { return t.module == module; });
      e.arap += last.loss.arap;
    }
    e.converged = r.converged;
    return e;
  };

  WeightSearchResult out;
  out.entries.resize(triples.size());
  const std::size_t lanes = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t lo = 0; lo < triples.size(); lo += lanes) {
    std::vector<std::future<WeightSearchEntry>> jobs;
    for (std::size_t i = lo; i < std::min(triples.size(), lo + lanes); ++i)
      jobs.push_back(std::async(std::launch::async, run, triples[i]));
    for (std::size_t i = 0; i < jobs.size(); ++i) out.entries[lo + i] = jobs[i].get();
  }
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    const auto& a = out.entries[i];
    const auto& b = out.entries[out.best];
    if (a.mean_chamfer < b.mean_chamfer || (a.mean_chamfer == b.mean_chamfer && a.arap < b.arap)) out.best = i;
  }
  return out;
}

CrossingReport check_non_crossing(const DeformationModel& model, const PointSet& points,
                                  double min_axis_fraction) {
  CrossingReport rep;
  PointSet p = points;
  for (std::size_t m = 0; m < model.modules.size(); ++m) {
    const auto traj = trajectory(model.modules[m], p);
    for (int k = 0; k < kEulerSteps; ++k) {
      const PointSet& a = traj[k];
      const PointSet& b = traj[k + 1];
      for (Eigen::Index i = 0; i < a.cols(); ++i) {
        Eigen::Index nn = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          if (j == i) continue;
          const double d = (a.col(i) - a.col(j)).squaredNorm();
          if (d < best) {
            best = d;
            nn = j;
          }
        }
        if (nn < 0) continue;
        for (int ax = 0; ax < 3; ++ax) {
          const double before = a(ax, i) - a(ax, nn), after = b(ax, i) - b(ax, nn);
          if (std::abs(before) >= min_axis_fraction * std::sqrt(best) && before * after < 0.0) {
            if (rep.violations == 0) {
              rep.first_module = static_cast<int>(m);
              rep.first_step = k;
              rep.first_vertex = static_cast<int>(i);
            }
            ++rep.violations;
            break;
          }
        }
      }
    }
    p = traj.back();
  }
  return rep;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  csv::Writer w(path);
  w.header({"module", "iteration", "total", "point", "normal", "arap", "chamfer_rms", "degenerate_normals"});
  for (const auto& t : trace)
    w.row({static_cast<double>(t.module), static_cast<double>(t.iteration), t.loss.total, t.loss.point,
           t.loss.normal, t.loss.arap, t.chamfer_rms, static_cast<double>(t.loss.degenerate_normals)});
}

}  // namespace heartflow::registration
