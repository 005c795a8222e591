#include "heartflow/geometry/tps.hpp"

#include <Eigen/Dense>

namespace heartflow::geometry {

TpsTransform tps_fit(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
  if (source.size() != target.size()) throw std::invalid_argument("tps_fit: landmark counts differ");
  const int n = static_cast<int>(source.size());
  if (n < 4) throw DegenerateLandmarksError("tps_fit: need at least 4 landmarks");

  Eigen::MatrixXd p(n, 4);
  for (int i = 0; i < n; ++i) p.row(i) << 1.0, source[i].transpose();
  if (Eigen::FullPivLU<Eigen::MatrixXd>(p).rank() < 4)
    throw DegenerateLandmarksError("tps_fit: source landmarks are coplanar");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 4, n + 4);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 4, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = (source[i] - source[j]).norm();
    b.row(i) = target[i].transpose();
  }
  a.topRightCorner(n, 4) = p;
  a.bottomLeftCorner(4, n) = p.transpose();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw DegenerateLandmarksError("tps_fit: landmark system is rank deficient");
  const Eigen::MatrixXd x = lu.solve(b);

  TpsTransform t;
  t.source = source;
  t.radial = x.topRows(n);
  t.affine = x.bottomRows(4);
  return t;
}

Vec3 tps_apply(const TpsTransform& t, const Vec3& q) {
  Vec3 out = t.affine.row(0).transpose() + t.affine.bottomRows(3).transpose() * q;
  for (std::size_t i = 0; i < t.source.size(); ++i)
    out += (q - t.source[i]).norm() * t.radial.row(static_cast<Eigen::Index>(i)).transpose();
  return out;
}

std::vector<Vec3> tps_apply(const TpsTransform& t, const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& q : points) out.push_back(tps_apply(t, q));
  return out;
}

}  // namespace heartflow::geometry
