#pragma once

// Resistive immersed surface quantities evaluated on a valve distance field.

#include <vector>

#include "heartflow/geometry/sdf.hpp"

namespace heartflow::geometry {

/// (1 + cos(pi phi / eps)) / (2 eps) for |phi| <= eps, else 0. Units 1/cm.
double smoothed_delta(double phi, double epsilon);

/// (r_k / eps) * delta(phi) * u_rel, with u_rel = u - u_mesh. r_k is an
/// opaque resistance coefficient.
Vec3 ris_force_density(double phi, double epsilon, double r_k, const Vec3& u_rel);

enum class Region { Upstream, Downstream, Band, Far };
const char* to_string(Region r);

/// Upstream phi > 2.5 eps, downstream phi < -2.5 eps, band |phi| <= eps,
/// far otherwise.
Region classify(double phi, double epsilon);

struct RegionLabels {
  std::vector<Region> labels;
  std::vector<bool> inside_valve;  // phi < -eps, used for backflow averaging
};

/// Labels every sample of a valve field. Requires field.epsilon > 0.
RegionLabels classify_regions(const ScalarField& field);

}  // namespace heartflow::geometry
