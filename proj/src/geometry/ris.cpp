#include "heartflow/geometry/ris.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heartflow::geometry {

double smoothed_delta(double phi, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("smoothed_delta: epsilon must be > 0");
  if (std::abs(phi) > eps) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * phi / eps)) / (2.0 * eps);
}

Vec3 ris_force_density(double phi, double eps, double r_k, const Vec3& u_rel) {
  return (r_k / eps) * smoothed_delta(phi, eps) * u_rel;
}

const char* to_string(Region r) {
  switch (r) {
    case Region::Upstream: return "upstream";
    case Region::Downstream: return "downstream";
    case Region::Band: return "band";
    case Region::Far: return "far";
  }
  return "?";
}

Region classify(double phi, double eps) {
  if (phi > 2.5 * eps) return Region::Upstream;
  if (phi < -2.5 * eps) return Region::Downstream;
  if (std::abs(phi) <= eps) return Region::Band;
  return Region::Far;
}

RegionLabels classify_regions(const ScalarField& field) {
  if (!(field.epsilon > 0.0)) throw std::invalid_argument("classify_regions: field epsilon must be > 0");
  RegionLabels out;
  out.labels.reserve(field.values.size());
  out.inside_valve.reserve(field.values.size());
  for (double phi : field.values) {
    out.labels.push_back(classify(phi, field.epsilon));
    out.inside_valve.push_back(phi < -field.epsilon);
  }
  return out;
}

}  // namespace heartflow::geometry
