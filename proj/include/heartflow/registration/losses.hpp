#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "heartflow/geometry/mesh.hpp"
#include "heartflow/registration/nearest.hpp"

namespace heartflow::registration {

using Faces = std::vector<std::array<int, 3>>;

inline constexpr double kLossFloor = 1e-12;

struct LossWeights {
  double point = 0.3;
  double normal = 0.4;
  double arap = 0.3;

  /// Non-negative and summing to 1 within 1e-9.
  void validate() const;
};

/// Symmetric sum of squared nearest-neighbour distances. When `grad` is
/// given it receives d/dP.
double loss_point(const PointSet& p, const PointSet& g, PointSet* grad = nullptr);

/// For each vertex, the two other corners of the first face that uses it
/// (in the face's cyclic order); {-1, -1} for unreferenced vertices.
std::vector<std::array<int, 2>> incident_edges(const Faces& faces, int vertex_count);

/// Area-weighted unit vertex normals.
PointSet vertex_normals(const PointSet& vertices, const Faces& faces);

struct NormalLoss {
  double value = 0.0;
  int degenerate = 0;  // vertices whose incident-edge cross product is zero
};

/// Sum over p of |(p1 - p) x (p2 - p) - n_g|^2 with g the nearest target
/// point to p.
NormalLoss loss_normal(const PointSet& p, const std::vector<std::array<int, 2>>& incident,
                       const PointSet& g, const PointSet& g_normals, PointSet* grad = nullptr,
                       const NearestGrid* g_grid = nullptr);

/// Per-vertex neighbour lists with weights w_ij.
struct ArapNeighbours {
  std::vector<std::vector<std::pair<int, double>>> adj;
};

/// Cotangent weights (cot a + cot b) / 2 per mesh edge, clamped at 0.
ArapNeighbours cotangent_weights(const PointSet& vertices, const Faces& faces);

/// Optimal rotation for one neighbourhood: polar factor of
/// sum_j w_ij (p_i' - p_j')(p_i - p_j)^T, reflections corrected.
Eigen::Matrix3d arap_rotation(const PointSet& reference, const PointSet& deformed,
                              const ArapNeighbours& nb, int i);

/// sum_i sum_j w_ij |(p_i' - p_j') - R_i (p_i - p_j)| (unsquared norm).
/// The gradient includes the dependence of R_i on the deformed positions.
double loss_arap(const PointSet& reference, const PointSet& deformed, const ArapNeighbours& nb,
                 PointSet* grad = nullptr);

/// L_point^a * L_normal^b * L_arap^c with each loss floored at kLossFloor.
double loss_total(double point, double normal, double arap, const LossWeights& w);

/// Dirichlet(1, 1, 1) triples, deterministic for a seed.
std::vector<LossWeights> sample_weights(int n, std::uint64_t seed);

/// sqrt(L_point / (|P| + |G|)).
double chamfer_rms(const PointSet& p, const PointSet& g);

}  // namespace heartflow::registration
