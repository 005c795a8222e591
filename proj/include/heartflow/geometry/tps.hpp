#pragma once

// 3D thin plate spline with the linear radial kernel U(r) = r:
//   f(x) = A^T [1, x] + sum_i w_i |x - s_i|.

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "heartflow/geometry/mesh.hpp"

namespace heartflow::geometry {

class DegenerateLandmarksError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TpsTransform {
  std::vector<Vec3> source;
  Eigen::MatrixX3d radial;  // one row per landmark
  Eigen::Matrix<double, 4, 3> affine;
};

/// Needs at least 4 non-coplanar, distinct source landmarks; otherwise the
/// system is rank deficient and DegenerateLandmarksError is thrown.
TpsTransform tps_fit(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

Vec3 tps_apply(const TpsTransform& t, const Vec3& p);
std::vector<Vec3> tps_apply(const TpsTransform& t, const std::vector<Vec3>& points);

}  // namespace heartflow::geometry
