#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "heartflow/contact.hpp"

using namespace heartflow::contact;

TEST_CASE("penetration") {
  ContactPointPair p;
  p.x1 = p.x2 = Vec3(1, 2, 3);
  CHECK(penetration(p) == 0.0);
  p.x2 = p.x1 + Vec3(0, 0, 0.3);
  CHECK(penetration(p) == doctest::Approx(0.3));
  p.x2 = p.x1 + Vec3(0.4, -0.2, 0);
  CHECK(penetration(p) == 0.0);
}

TEST_CASE("penalty map branches, continuity and C1 match at d = 0") {
  const ContactConfig c{2.5, 0.4};
  CHECK(penalty_magnitude(-0.4, c) == 0.0);
  CHECK(penalty_magnitude(-1.0, c) == 0.0);
  CHECK(penalty_magnitude(0.0, c) == doctest::Approx(c.k * c.h / 2));
  const double left = c.k * c.h * c.h / (2 * c.h);  // quadratic branch at d -> 0
  CHECK(left == doctest::Approx(penalty_magnitude(0.0, c)));
  const double h = 1e-7;
  const double right_slope = (penalty_magnitude(h, c) - penalty_magnitude(0.0, c)) / h;
  const double left_slope = (penalty_magnitude(0.0, c) - penalty_magnitude(-h, c)) / h;
  CHECK(std::abs(right_slope - c.k) / c.k < 1e-8);
  CHECK(std::abs(left_slope - c.k) / c.k < 1e-6);  // O(h k / h_gap) curvature term
  CHECK(std::abs(left_slope - right_slope) / c.k < 1e-6);
  CHECK(penalty_slope(0.0, c) == c.k);
  CHECK(penalty_slope(-1e-300, c) == doctest::Approx(c.k));
  CHECK(penalty_magnitude(-c.h + 1e-12, c) < 1e-20);
}

TEST_CASE("one-sided difference quotients agree to 1e-8 with an exact-arithmetic step") {
  // Both branches are polynomials: quotient errors are exactly the second
  // derivative times h / 2, so a step of 2^-30 resolves the slope to 1e-8.
  const ContactConfig c{3.0, 0.5};
  const double h = std::ldexp(1.0, -30);
  const double right = (penalty_magnitude(h, c) - penalty_magnitude(0.0, c)) / h;
  const double left = (penalty_magnitude(0.0, c) - penalty_magnitude(-h, c)) / h;
  CHECK(std::abs(right - left) / c.k < 1e-8);
  CHECK(std::abs(left - c.k) / c.k < 1e-8);
}

TEST_CASE("penalty map is monotone, continuous and linear in k") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> k(0.1, 50), hg(0.01, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const ContactConfig c{k(rng), hg(rng)};
    double prev = -1, prev_d = 0;
    for (int i = 0; i <= 4000; ++i) {
      const double d = -2.0 * c.h + 3.0 * c.h * i / 4000.0;
      const double p = penalty_magnitude(d, c);
      CHECK(p >= prev);
      if (prev >= 0) CHECK(p - prev <= c.k * (d - prev_d) + 8 * std::numeric_limits<double>::epsilon() * p);
      prev = p;
      prev_d = d;
      const ContactConfig c3{3 * c.k, c.h};
      CHECK(penalty_magnitude(d, c3) == doctest::Approx(3 * p).epsilon(1e-14));
    }
  }
}

TEST_CASE("zero gap limit") {
  const ContactConfig c{4.0, 0.0};
  CHECK(penalty_magnitude(-1e-9, c) == 0.0);
  CHECK(penalty_magnitude(0.0, c) == 0.0);
  CHECK(penalty_magnitude(0.25, c) == 1.0);
}

TEST_CASE("config and pair validation") {
  CHECK_THROWS((ContactConfig{0.0, 1.0}.validate()));
  CHECK_THROWS((ContactConfig{1.0, -1.0}.validate()));
  ContactPointPair p;
  p.n2 = Vec3(0, 0, 1.1);
  CHECK_THROWS(p.validate());
  p.n2 = Vec3(0, 0, 1.0 + 5e-10);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("forces: separated pairs are free, all pairs cancel exactly") {
  const ContactConfig c{10.0, 0.2};
  ContactPointPair far;
  far.x2 = far.x1 - Vec3(0, 0, 0.2);
  const auto f0 = contact_forces({far}, c);
  CHECK(f0[0].f1 == Vec3::Zero());
  CHECK(f0[0].f2 == Vec3::Zero());

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> w(0, 2);
  std::vector<ContactPointPair> pairs(10000);
  for (auto& p : pairs) {
    p.x1 = {g(rng), g(rng), g(rng)};
    p.x2 = p.x1 + 0.1 * Vec3(g(rng), g(rng), g(rng));
    p.n2 = Vec3(g(rng), g(rng), g(rng)).normalized();
    p.w = w(rng);
  }
  const auto forces = contact_forces(pairs, c);
  int active = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(forces[i].f1 + forces[i].f2 == Vec3::Zero());
    if (forces[i].f1 != Vec3::Zero()) ++active;
    const Vec3 expect = -pairs[i].w * penalty_magnitude(penetration(pairs[i]), c) * pairs[i].n2;
    CHECK(forces[i].f1 == expect);
  }
  CHECK(active > 1000);
  CHECK(net_force(forces) == Vec3::Zero());
}

TEST_CASE("aligned pairs exert no torque about any point") {
  const ContactConfig c{7.0, 0.3};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    ContactPointPair p;
    p.n2 = Vec3(g(rng), g(rng), g(rng)).normalized();
    p.x1 = {g(rng), g(rng), g(rng)};
    p.x2 = p.x1 + 0.2 * g(rng) * p.n2;
    const auto f = contact_forces({p}, c)[0];
    const Vec3 o(g(rng), g(rng), g(rng));
    CHECK(pair_torque(p, f, o).norm() <= 1e-12 * std::max(1.0, f.f1.norm()));
  }
}
