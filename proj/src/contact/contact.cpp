#include "heartflow/contact.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace heartflow::contact {

void ContactConfig::validate() const {
  std::ostringstream err;
  if (!(k > 0.0) || !std::isfinite(k)) err << " k must be > 0;";
  if (!(h >= 0.0) || !std::isfinite(h)) err << " h must be >= 0;";
  if (!err.str().empty()) throw std::invalid_argument("contact config:" + err.str());
}

void ContactPointPair::validate() const {
  if (!x1.allFinite() || !x2.allFinite() || !n2.allFinite() || !std::isfinite(w))
    throw std::invalid_argument("contact pair: non-finite values");
  if (std::abs(n2.norm() - 1.0) > 1e-9) throw std::invalid_argument("contact pair: n2 must be a unit vector");
  if (w < 0.0) throw std::invalid_argument("contact pair: weight must be >= 0");
}

double penetration(const ContactPointPair& p) { return (p.x2 - p.x1).dot(p.n2); }

double penalty_magnitude(double d, const ContactConfig& c) {
  if (d >= 0.0) return 0.5 * c.k * c.h + c.k * d;
  if (c.h == 0.0 || d <= -c.h) return 0.0;
  return c.k * (d + c.h) * (d + c.h) / (2.0 * c.h);
}

double penalty_slope(double d, const ContactConfig& c) {
  if (d >= 0.0) return c.k;
  if (c.h == 0.0 || d <= -c.h) return 0.0;
  return c.k * (d + c.h) / c.h;
}

std::vector<PairForce> contact_forces(const std::vector<ContactPointPair>& pairs, const ContactConfig& cfg) {
  cfg.validate();
  std::vector<PairForce> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    p.validate();
    PairForce f;
    f.f1 = -p.w * penalty_magnitude(penetration(p), cfg) * p.n2;
    f.f2 = -f.f1;
    out.push_back(f);
  }
  return out;
}

Vec3 net_force(const std::vector<PairForce>& forces) {
  Vec3 s = Vec3::Zero();
  for (const auto& f : forces) s += f.f1 + f.f2;
  return s;
}

Vec3 pair_torque(const ContactPointPair& p, const PairForce& f, const Vec3& o) {
  return (p.x1 - o).cross(f.f1) + (p.x2 - o).cross(f.f2);
}

}  // namespace heartflow::contact
