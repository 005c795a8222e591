#include "heartflow/registration/nearest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace heartflow::registration {

namespace {

bool better(double d, int i, const Neighbour& best) {
  return best.index < 0 || d < best.distance_sq || (d == best.distance_sq && i < best.index);
}

}  // namespace

Neighbour nearest_brute_force(const PointSet& points, const Eigen::Vector3d& q) {
  Neighbour best{-1, std::numeric_limits<double>::infinity()};
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double d = (points.col(i) - q).squaredNorm();
    if (better(d, static_cast<int>(i), best)) best = {static_cast<int>(i), d};
  }
  return best;
}

NearestGrid::NearestGrid(const PointSet& points) : points_(&points) {
  const Eigen::Index n = points.cols();
  if (n == 0) throw std::invalid_argument("NearestGrid: empty point set");
  lo_ = points.rowwise().minCoeff();
  const Eigen::Vector3d ext = points.rowwise().maxCoeff() - lo_;
  const double span = std::max(ext.maxCoeff(), 1e-12);
  // About two points per occupied cell on surface-like sets.
  cell_ = std::max(span / std::max(1.0, std::sqrt(static_cast<double>(n) / 2.0)), span * 1e-6);
  for (int a = 0; a < 3; ++a) dims_[a] = std::max(1, static_cast<int>(std::floor(ext[a] / cell_)) + 1);
  const int cells = dims_[0] * dims_[1] * dims_[2];
  std::vector<int> owner(static_cast<std::size_t>(n));
  start_.assign(static_cast<std::size_t>(cells) + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(static_cast<int>(std::floor((points(a, i) - lo_[a]) / cell_)), 0, dims_[a] - 1);
    owner[i] = cell_index(c[0], c[1], c[2]);
    ++start_[owner[i] + 1];
  }
  for (int c = 0; c < cells; ++c) start_[c + 1] += start_[c];
  items_.resize(static_cast<std::size_t>(n));
  std::vector<int> fill(start_.begin(), start_.end() - 1);
  for (Eigen::Index i = 0; i < n; ++i) items_[fill[owner[i]]++] = static_cast<int>(i);
}

Neighbour NearestGrid::nearest(const Eigen::Vector3d& q) const {
  std::array<int, 3> c;
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(static_cast<int>(std::floor((q[a] - lo_[a]) / cell_)), 0, dims_[a] - 1);
  Neighbour best{-1, std::numeric_limits<double>::infinity()};
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int r = 0; r <= max_ring; ++r) {
    std::array<int, 3> lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, c[a] - r);
      hi[a] = std::min(dims_[a] - 1, c[a] + r);
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          if (std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])}) != r) continue;
          const int cell = cell_index(i, j, k);
          for (int s = start_[cell]; s < start_[cell + 1]; ++s) {
            const int idx = items_[s];
            const double d = (points_->col(idx) - q).squaredNorm();
            if (better(d, idx, best)) best = {idx, d};
          }
        }
    // Lower bound on the distance to any cell outside the visited block.
    double bound = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (lo[a] > 0) bound = std::min(bound, std::max(0.0, q[a] - (lo_[a] + lo[a] * cell_)));
      if (hi[a] < dims_[a] - 1) bound = std::min(bound, std::max(0.0, (lo_[a] + (hi[a] + 1) * cell_) - q[a]));
    }
    if (std::isinf(bound)) break;  // whole grid visited
    bound = std::max(0.0, bound - 1e-9 * cell_);  // rounding in the cell assignment
    if (best.index >= 0 && bound * bound > best.distance_sq) break;
  }
  return best;
}

}  // namespace heartflow::registration
