#include "heartflow/geometry/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace heartflow::geometry {

double point_triangle_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                  Vec3* closest) {
  // Voronoi-region walk over vertices, edges and the face interior.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  Vec3 q;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    q = a;
  } else {
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    const double vc = d1 * d4 - d3 * d2, vb = d5 * d2 - d1 * d6, va = d3 * d6 - d5 * d4;
    if (d3 >= 0.0 && d4 <= d3) {
      q = b;
    } else if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
      q = a + (d1 / (d1 - d3)) * ab;
    } else if (d6 >= 0.0 && d5 <= d6) {
      q = c;
    } else if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
      q = a + (d2 / (d2 - d6)) * ac;
    } else if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
      q = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    } else {
      const double denom = 1.0 / (va + vb + vc);
      q = a + ab * (vb * denom) + ac * (vc * denom);
    }
  }
  if (closest) *closest = q;
  return (p - q).squaredNorm();
}

MeshDistance::MeshDistance(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  mesh_.validate();
  if (mesh_.faces.empty()) throw std::invalid_argument("MeshDistance: mesh has no faces");
  closed_ = mesh_.is_closed_oriented();
  const int nf = static_cast<int>(mesh_.faces.size());
  order_.resize(static_cast<std::size_t>(nf));
  std::vector<Vec3> centroids(static_cast<std::size_t>(nf));
  for (int f = 0; f < nf; ++f) {
    order_[f] = f;
    const auto& t = mesh_.faces[f];
    centroids[f] = (mesh_.vertices[t[0]] + mesh_.vertices[t[1]] + mesh_.vertices[t[2]]) / 3.0;
  }
  nodes_.reserve(static_cast<std::size_t>(2 * nf));
  build(0, nf, centroids);
}

int MeshDistance::build(int first, int count, std::vector<Vec3>& centroids) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box, cbox;
  for (int i = first; i < first + count; ++i) {
    for (int k : mesh_.faces[order_[i]]) box.extend(mesh_.vertices[k]);
    cbox.extend(centroids[order_[i]]);
  }
  nodes_[id].box = box;
  if (count <= 4) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  int axis;
  cbox.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  const int l = build(first, mid - first, centroids);
  const int r = build(mid, first + count - mid, centroids);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

double MeshDistance::unsigned_distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.box.squaredExteriorDistance(p) > best) continue;
    if (n.left < 0) {
      for (int i = n.first; i < n.first + n.count; ++i) {
        const auto& t = mesh_.faces[order_[i]];
        best = std::min(best, point_triangle_distance_sq(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                                         mesh_.vertices[t[2]]));
      }
      continue;
    }
    // Visit the nearer child first.
    const double dl = nodes_[n.left].box.squaredExteriorDistance(p);
    const double dr = nodes_[n.right].box.squaredExteriorDistance(p);
    if (dl < dr) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return std::sqrt(best);
}

double MeshDistance::winding_number(const Vec3& p) const {
  double total = 0.0;
  for (const auto& t : mesh_.faces) {
    const Vec3 a = mesh_.vertices[t[0]] - p, b = mesh_.vertices[t[1]] - p, c = mesh_.vertices[t[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

ScalarField signed_distance(const MeshDistance& tree, const std::vector<Vec3>& points, double epsilon,
                            const std::string& mesh_id) {
  ScalarField out;
  out.points = points;
  out.values.resize(points.size());
  out.mesh_id = mesh_id;
  out.epsilon = epsilon;
  out.is_signed = tree.closed();
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double d = tree.unsigned_distance(points[i]);
      if (out.is_signed && d > 0.0 && tree.winding_number(points[i]) > 0.5) d = -d;
      out.values[i] = d;
    }
  };
  const std::size_t n = points.size();
  const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (n < 64 || threads == 1) {
    work(0, n);
    return out;
  }
  const std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::future<void>> jobs;
  for (std::size_t lo = 0; lo < n; lo += chunk)
    jobs.push_back(std::async(std::launch::async, work, lo, std::min(n, lo + chunk)));
  for (auto& j : jobs) j.get();
  return out;
}

ScalarField signed_distance(const TriangleMesh& mesh, const std::vector<Vec3>& points, double epsilon,
                            const std::string& mesh_id) {
  return signed_distance(MeshDistance(mesh), points, epsilon, mesh_id);
}

std::vector<Vec3> grid_points(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& n) {
  for (int k : n)
    if (k < 1) throw std::invalid_argument("grid_points: counts must be >= 1");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  auto coord = [&](int axis, int i) {
    return n[axis] == 1 ? 0.5 * (lo[axis] + hi[axis])
                        : lo[axis] + (hi[axis] - lo[axis]) * i / (n[axis] - 1);
  };
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) pts.emplace_back(coord(0, i), coord(1, j), coord(2, k));
  return pts;
}

const ScalarField& SdfCache::get(const std::string& mesh_id, const std::string& valve_state,
                                 const Compute& compute) {
  std::lock_guard lock(mutex_);
  auto& slot = fields_[{mesh_id, valve_state}];
  if (!slot) {
    slot = std::make_unique<ScalarField>(compute());
    ++computations_;
  }
  return *slot;
}

int SdfCache::computations() const {
  std::lock_guard lock(mutex_);
  return computations_;
}

void SdfCache::clear() {
  std::lock_guard lock(mutex_);
  fields_.clear();
}

}  // namespace heartflow::geometry
