#pragma once

#include "heartflow/registration/network.hpp"

namespace heartflow::registration {

struct Neighbour {
  int index = -1;
  double distance_sq = 0.0;
};

Neighbour nearest_brute_force(const PointSet& points, const Eigen::Vector3d& q);

/// Uniform-grid nearest-neighbour search. Results equal the brute-force scan
/// exactly, ties going to the lowest index.
class NearestGrid {
 public:
  explicit NearestGrid(const PointSet& points);
  Neighbour nearest(const Eigen::Vector3d& q) const;

 private:
  int cell_index(int i, int j, int k) const { return (k * dims_[1] + j) * dims_[0] + i; }

  const PointSet* points_;
  Eigen::Vector3d lo_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<int> start_;  // CSR layout over cells
  std::vector<int> items_;
};

}  // namespace heartflow::registration
