#pragma once

// Penalty contact between precomputed surface point pairs.

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace heartflow::contact {

using Vec3 = Eigen::Vector3d;

struct ContactConfig {
  double k = 1.0;  // penalty stiffness
  double h = 0.0;  // admissible gap [cm]

  void validate() const;  // k > 0, h >= 0
};

struct ContactPointPair {
  Vec3 x1 = Vec3::Zero();
  Vec3 x2 = Vec3::Zero();
  Vec3 n2 = Vec3::UnitZ();  // unit normal at x2
  double w = 1.0;           // quadrature weight [cm^2]

  void validate() const;  // |n2| = 1 within 1e-9, w >= 0, finite
};

/// d = (x2 - x1) . n2; positive means interpenetration.
double penetration(const ContactPointPair& pair);

/// 0 for d <= -h, k (d + h)^2 / (2h) for -h < d < 0, k h / 2 + k d for
/// d >= 0. With h = 0 the quadratic branch vanishes.
double penalty_magnitude(double d, const ContactConfig& cfg);

/// dP/dd.
double penalty_slope(double d, const ContactConfig& cfg);

struct PairForce {
  Vec3 f1 = Vec3::Zero();
  Vec3 f2 = Vec3::Zero();
};

/// f1 = -w P(d) n2 and f2 = -f1 for every pair.
std::vector<PairForce> contact_forces(const std::vector<ContactPointPair>& pairs, const ContactConfig& cfg);

/// Sum over pairs of (f1 + f2).
Vec3 net_force(const std::vector<PairForce>& forces);

/// Torque of one pair's forces about `origin`.
Vec3 pair_torque(const ContactPointPair& pair, const PairForce& force, const Vec3& origin);

}  // namespace heartflow::contact
