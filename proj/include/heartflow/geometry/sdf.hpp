#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "heartflow/geometry/mesh.hpp"

namespace heartflow::geometry {

/// Squared distance from p to triangle (a, b, c) and the closest point.
double point_triangle_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                  Vec3* closest = nullptr);

/// Bounding-volume hierarchy over the faces of a mesh, answering exact
/// nearest-surface queries. Holds a copy of the mesh.
class MeshDistance {
 public:
  explicit MeshDistance(TriangleMesh mesh);

  double unsigned_distance(const Vec3& p) const;
  /// Generalised winding number: sum of signed solid angles / 4 pi. About 1
  /// inside an outward-oriented closed mesh, 0 outside.
  double winding_number(const Vec3& p) const;

  const TriangleMesh& mesh() const { return mesh_; }
  bool closed() const { return closed_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;  // child indices; leaves use [first, first + count)
    int right = -1;
    int first = 0;
    int count = 0;
  };
  int build(int first, int count, std::vector<Vec3>& centroids);

  TriangleMesh mesh_;
  bool closed_ = false;
  std::vector<int> order_;  // face indices in leaf order
  std::vector<Node> nodes_;
};

/// Sampled distance field. For signed fields negative means inside.
struct ScalarField {
  std::vector<Vec3> points;
  std::vector<double> values;
  std::string mesh_id;
  double epsilon = 0.0;  // smoothing half-width carried with the field
  bool is_signed = true;  // false when the mesh was open: values are unsigned
};

/// Exact signed distance at each point (winding-number sign). An open mesh
/// yields unsigned distances with is_signed = false. Points are processed in
/// parallel; output order follows input order.
ScalarField signed_distance(const TriangleMesh& mesh, const std::vector<Vec3>& points,
                            double epsilon = 0.0, const std::string& mesh_id = "");
ScalarField signed_distance(const MeshDistance& tree, const std::vector<Vec3>& points,
                            double epsilon = 0.0, const std::string& mesh_id = "");

/// Regular grid of n[0] x n[1] x n[2] points spanning [lo, hi], x fastest.
std::vector<Vec3> grid_points(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& n);

/// Distance fields keyed by (mesh id, valve state): a field is only
/// recomputed when that pair has not been seen before.
class SdfCache {
 public:
  using Compute = std::function<ScalarField()>;

  const ScalarField& get(const std::string& mesh_id, const std::string& valve_state,
                         const Compute& compute);
  int computations() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<ScalarField>> fields_;
  int computations_ = 0;
};

}  // namespace heartflow::geometry
