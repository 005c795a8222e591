#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "heartflow/geometry/mesh.hpp"
#include "heartflow/registration/losses.hpp"
#include "heartflow/registration/network.hpp"

namespace heartflow::registration {

class RegistrationError : public std::runtime_error {
 public:
  RegistrationError(int module, int iteration, const std::string& what);
  int module() const { return module_; }
  int iteration() const { return iteration_; }

 private:
  int module_;
  int iteration_;
};

struct TrainOptions {
  int max_iterations = 2000;  // per module
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double chamfer_tolerance = 0.01;  // cm, symmetric Chamfer RMS
  int width = 64;
};

/// The baseline is morphed through the targets in order, one deformation
/// module per target. Each module starts from the previous module's output;
/// its ARAP reference is that input.
struct RegistrationProblem {
  geometry::TriangleMesh baseline;
  std::vector<geometry::TriangleMesh> targets;
  TrainOptions options;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LossBreakdown {
  double point = 0.0;
  double normal = 0.0;
  double arap = 0.0;
  double total = 0.0;
  int degenerate_normals = 0;
};

struct TraceRow {
  int module = 0;
  int iteration = 0;
  LossBreakdown loss;
  double chamfer_rms = 0.0;
};

struct TrainResult {
  DeformationModel model;
  std::vector<TraceRow> trace;
  std::vector<PointSet> frames;        // deformed baseline after each module
  std::vector<int> iterations;         // updates taken per module
  std::vector<double> final_chamfer;   // per module
  bool converged = false;              // every module reached the tolerance
};

/// Loss values and d(total)/d(deformed) for one module's configuration.
struct ModuleLoss {
  LossBreakdown value;
  PointSet grad;
};

class ModuleObjective {
 public:
  ModuleObjective(const PointSet& reference, const Faces& faces, const geometry::TriangleMesh& target,
                  const LossWeights& weights);
  ModuleLoss evaluate(const PointSet& deformed, bool with_gradient = true) const;
  const PointSet& target_points() const { return g_; }

 private:
  PointSet reference_;
  std::vector<std::array<int, 2>> incident_;
  ArapNeighbours neighbours_;
  PointSet g_;
  PointSet g_normals_;
  NearestGrid g_grid_;
  LossWeights weights_;
};

/// Adam on loss_total, module by module. Each module stops once the Chamfer
/// RMS drops below the tolerance and otherwise keeps the best parameters
/// seen. A non-finite loss throws RegistrationError.
TrainResult train(const RegistrationProblem& problem, const LossWeights& weights);

struct WeightSearchEntry {
  LossWeights weights;
  double mean_chamfer = 0.0;  // over modules
  double arap = 0.0;          // summed final ARAP loss
  bool converged = false;
};

struct WeightSearchResult {
  std::vector<WeightSearchEntry> entries;
  std::size_t best = 0;
};

/// Trains one independent model per sampled triple (concurrently) with
/// `iterations` per module and picks the lowest mean Chamfer RMS, ties
/// broken by lower ARAP loss then sample order.
WeightSearchResult weight_search(const RegistrationProblem& problem, int samples, std::uint64_t seed,
                                 int iterations);

struct CrossingReport {
  int violations = 0;
  int first_module = -1;
  int first_step = -1;
  int first_vertex = -1;
};

/// Trajectory post-check: for every Euler step, each vertex keeps the sign
/// of its offset to its nearest neighbour (taken at the start of the step)
/// along every axis. An axis only orders the pair when it carries at least
/// `min_axis_fraction` of their distance; side-by-side pairs rotating
/// slightly are not swaps.
CrossingReport check_non_crossing(const DeformationModel& model, const PointSet& points,
                                  double min_axis_fraction = 0.1);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

PointSet to_points(const std::vector<geometry::Vec3>& v);
std::vector<geometry::Vec3> from_points(const PointSet& p);

}  // namespace heartflow::registration
