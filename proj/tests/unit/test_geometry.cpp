#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "heartflow/geometry/mesh.hpp"
#include "heartflow/geometry/ris.hpp"
#include "heartflow/geometry/sdf.hpp"
#include "heartflow/geometry/tps.hpp"

using namespace heartflow::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double s = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

// Plane projection with a barycentric inside test, else nearest edge.
double oracle_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 q = p - n * (p - a).dot(n) / n.squaredNorm();
  const double area = n.norm();
  const double wa = (b - q).cross(c - q).dot(n) / (area * area);
  const double wb = (c - q).cross(a - q).dot(n) / (area * area);
  const double wc = 1.0 - wa - wb;
  if (wa >= 0 && wb >= 0 && wc >= 0) return (p - q).norm();
  return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

double oracle_distance(const TriangleMesh& m, const Vec3& p) {
  double best = INFINITY;
  for (const auto& t : m.faces)
    best = std::min(best, oracle_triangle_distance(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
  return best;
}

std::vector<Vec3> random_points(int n, double half, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("generators are closed and outward oriented") {
    const auto s = make_icosphere(1.0, 3);
    CHECK(s.faces.size() == 20 * 64);
    CHECK(s.is_closed_oriented());
    const auto b = make_box({0, 0, 0}, {1, 1, 1});
    CHECK(b.is_closed_oriented());
    for (std::size_t f = 0; f < b.faces.size(); ++f) {
      const auto& t = b.faces[f];
      const Vec3 c = (b.vertices[t[0]] + b.vertices[t[1]] + b.vertices[t[2]]) / 3.0;
      CHECK(b.face_normal(f).dot(c - Vec3(0.5, 0.5, 0.5)) > 0.0);
    }
  }

  TEST_CASE("enclosed volume") {
    CHECK(enclosed_volume(make_box({0, 0, 0}, {1, 1, 1})) == doctest::Approx(1.0).epsilon(1e-14));
    const auto s = make_icosphere(1.0, 5);
    CHECK(std::abs(enclosed_volume(s) - 4.0 * kPi / 3.0) / (4.0 * kPi / 3.0) < 0.005);
    CHECK(enclosed_volume(s.flipped()) == doctest::Approx(-enclosed_volume(s)));
    CHECK(enclosed_volume(make_icosphere(2.0, 2, {5, -3, 1})) ==
          doctest::Approx(8.0 * enclosed_volume(make_icosphere(1.0, 2))));
    auto open = make_box({0, 0, 0}, {1, 1, 1});
    open.faces.pop_back();
    CHECK_THROWS_AS(enclosed_volume(open), std::invalid_argument);
  }

  TEST_CASE("validation catches bad indices and tag arrays") {
    TriangleMesh m = make_box({0, 0, 0}, {1, 1, 1});
    m.faces[0][1] = 99;
    m.tags = {1, 2};
    try {
      m.validate();
      FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("out of range") != std::string::npos);
      CHECK(msg.find("tags") != std::string::npos);
    }
  }

  TEST_CASE("mesh and tag files round-trip") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto b = make_box({0, 0, 0}, {1, 2, 3}, true);
    write_mesh((dir / "hf_box.mesh").string(), b);
    write_tags((dir / "hf_box_tags.csv").string(), b);
    const auto r = read_mesh((dir / "hf_box.mesh").string(), (dir / "hf_box_tags.csv").string());
    CHECK(r.faces == b.faces);
    CHECK(r.tags == b.tags);
    for (std::size_t i = 0; i < b.vertices.size(); ++i) CHECK(r.vertices[i] == b.vertices[i]);
    {
      std::ofstream f(dir / "hf_bad.mesh");
      f << "3 1\n0 0 0\n1 0 0\n";
    }
    CHECK_THROWS(read_mesh((dir / "hf_bad.mesh").string()));
  }

  TEST_CASE("cap flux") {
    const auto b = make_box({0, 0, 0}, {1, 2, 1}, true);  // -x side (tag 1) has area 2
    CHECK(cap_area(b, 1) == doctest::Approx(2.0));
    std::vector<Vec3> u(b.vertices.size(), Vec3(-1, 0, 0));  // along the outward cap normal
    CHECK(cap_flux(b, 1, u) == doctest::Approx(2.0).epsilon(1e-14));
    std::vector<Vec3> tangential(b.vertices.size(), Vec3(0, 0.7, -0.3));
    CHECK(std::abs(cap_flux(b, 1, tangential)) < 1e-15);
    CHECK_THROWS_AS(cap_flux(b, 42, u), std::invalid_argument);
    CHECK_THROWS_AS(cap_flux(make_box({0, 0, 0}, {1, 1, 1}), 1, u), std::invalid_argument);
  }

  TEST_CASE("cap flux matches edge-midpoint quadrature and is linear") {
    auto s = make_icosphere(1.3, 3);
    s.tags.assign(s.faces.size(), kWallTag);
    for (std::size_t f = 0; f < s.faces.size(); ++f)
      if (s.vertices[s.faces[f][0]].z() > 0.6) s.tags[f] = 3;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::vector<Vec3> u(s.vertices.size()), w(s.vertices.size());
    for (auto& x : u) x = {g(rng), g(rng), g(rng)};
    for (auto& x : w) x = {g(rng), g(rng), g(rng)};
    double oracle = 0.0;
    for (std::size_t f = 0; f < s.faces.size(); ++f) {
      if (s.tags[f] != 3) continue;
      const auto& t = s.faces[f];
      const Vec3 n = s.face_normal(f);
      double avg = 0.0;
      for (int k = 0; k < 3; ++k) avg += (0.5 * (u[t[k]] + u[t[(k + 1) % 3]])).dot(n) / 3.0;
      oracle += s.face_area(f) * avg;
    }
    const double q = cap_flux(s, 3, u);
    CHECK(std::abs(q - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
    const double a = 2.5, bcoef = -0.75;
    std::vector<Vec3> mix(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mix[i] = a * u[i] + bcoef * w[i];
    const double lin = a * q + bcoef * cap_flux(s, 3, w);
    CHECK(std::abs(cap_flux(s, 3, mix) - lin) <= 1e-12 * std::max(1.0, std::abs(lin)));
  }
}

TEST_SUITE("sdf") {
  TEST_CASE("icosphere centre and surface points") {
    const auto s = make_icosphere(1.0, 5);
    const auto f = signed_distance(s, {Vec3::Zero(), s.vertices[17], Vec3(2, 0, 0)});
    CHECK(f.is_signed);
    CHECK(std::abs(f.values[0] + 1.0) < 2e-3);
    CHECK(f.values[1] == 0.0);
    CHECK(f.values[2] == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("BVH distance equals the brute-force scan on random queries") {
    const auto s = make_icosphere(1.0, 3, {0.1, -0.2, 0.05});
    const auto pts = random_points(1000, 2.0, 3);
    const MeshDistance tree(s);
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, std::abs(tree.unsigned_distance(p) - oracle_distance(s, p)));
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("sign follows containment for spheres and boxes") {
    const auto s = make_icosphere(1.0, 3);
    const auto pts = random_points(400, 1.6, 5);
    const auto f = signed_distance(s, pts);
    int checked = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r = pts[i].norm();
      if (r < 0.95) {
        CHECK(f.values[i] < 0.0);
        ++checked;
      }
      if (r > 1.05) {
        CHECK(f.values[i] > 0.0);
        ++checked;
      }
    }
    CHECK(checked > 300);
    const auto b = make_box({-1, -1, -1}, {1, 2, 1});
    const auto fb = signed_distance(b, {{0, 0, 0}, {0, 1.5, 0}, {1.5, 0, 0}, {0, 2.5, 0}});
    CHECK(fb.values[0] == doctest::Approx(-1.0));
    CHECK(fb.values[1] == doctest::Approx(-0.5));
    CHECK(fb.values[2] == doctest::Approx(0.5));
    CHECK(fb.values[3] == doctest::Approx(0.5));
  }

  TEST_CASE("open meshes return unsigned distances with a flag") {
    auto b = make_box({0, 0, 0}, {1, 1, 1});
    b.faces.resize(10);
    const auto f = signed_distance(b, {{0.5, 0.5, 0.5}});
    CHECK_FALSE(f.is_signed);
    CHECK(f.values[0] == doctest::Approx(0.5));
  }

  TEST_CASE("gradient magnitude is close to one away from the medial axis") {
    const auto s = make_icosphere(1.0, 4);
    const MeshDistance tree(s);
    const auto pts = random_points(300, 1.8, 9);
    const double h = 1e-4;
    int good = 0, total = 0;
    for (const auto& p : pts) {
      if (p.norm() < 0.3) continue;  // medial point at the centre
      Vec3 grad;
      for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = h;
        grad[k] = (signed_distance(tree, {p + e}).values[0] - signed_distance(tree, {p - e}).values[0]) / (2 * h);
      }
      ++total;
      if (std::abs(grad.norm() - 1.0) < 1e-3) ++good;
    }
    CHECK(good >= 0.95 * total);
  }

  TEST_CASE("batch results are ordered by input index") {
    const auto s = make_icosphere(1.0, 2);
    const auto pts = random_points(500, 1.5, 21);
    const auto batch = signed_distance(s, pts);
    const MeshDistance tree(s);
    for (std::size_t i = 0; i < pts.size(); i += 37)
      CHECK(batch.values[i] == signed_distance(tree, {pts[i]}).values[0]);
  }

  TEST_CASE("grid points") {
    const auto g = grid_points({0, 0, 0}, {1, 2, 3}, {2, 3, 4});
    CHECK(g.size() == 24);
    CHECK(g[1] == Vec3(1, 0, 0));
    CHECK(g[2] == Vec3(0, 1, 0));
    CHECK(g.back() == Vec3(1, 2, 3));
  }

  TEST_CASE("cache recomputes only for a new (mesh, valve state) pair") {
    SdfCache cache;
    const auto s = make_icosphere(1.0, 1);
    int calls = 0;
    auto compute = [&] {
      ++calls;
      return signed_distance(s, {Vec3::Zero()}, 0.1, "av");
    };
    cache.get("av", "Closed", compute);
    cache.get("av", "Closed", compute);
    cache.get("av", "Open", compute);
    const auto& f = cache.get("av", "Closed", compute);
    CHECK(calls == 2);
    CHECK(cache.computations() == 2);
    CHECK(f.epsilon == 0.1);
  }
}

TEST_SUITE("ris") {
  TEST_CASE("smoothed delta") {
    CHECK(smoothed_delta(0.0, 2.0) == doctest::Approx(0.5));
    CHECK(smoothed_delta(2.0001, 2.0) == 0.0);
    CHECK(smoothed_delta(-5.0, 2.0) == 0.0);
    CHECK(std::abs(smoothed_delta(2.0, 2.0)) < 1e-16);
    CHECK(std::abs(smoothed_delta(-2.0, 2.0)) < 1e-16);
    CHECK_THROWS(smoothed_delta(0.0, 0.0));
    const double eps = 0.7;
    const int n = 10000;
    double sum = 0.0;  // composite Simpson
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * smoothed_delta(-eps + 2.0 * eps * i / n, eps);
    }
    CHECK(std::abs(sum * (2.0 * eps / n) / 3.0 - 1.0) < 1e-6);
  }

  TEST_CASE("force density") {
    CHECK(ris_force_density(0.0, 1.0, 2.0, {0, 0, 0}) == Vec3::Zero());
    CHECK(ris_force_density(1.5, 1.0, 2.0, {1, 2, 3}) == Vec3::Zero());
    const Vec3 f = ris_force_density(0.0, 1.0, 2.0, {1, 0, 0});
    CHECK(f.x() == doctest::Approx(2.0));
    CHECK(f.y() == 0.0);
    CHECK(f.z() == 0.0);
  }

  TEST_CASE("region classification partitions the samples") {
    const double eps = 0.2;
    CHECK(classify(3 * eps, eps) == Region::Upstream);
    CHECK(classify(-3 * eps, eps) == Region::Downstream);
    CHECK(classify(-1.5 * eps, eps) == Region::Far);
    CHECK(classify(0.5 * eps, eps) == Region::Band);
    ScalarField f;
    f.epsilon = eps;
    for (int i = -400; i <= 400; ++i) f.values.push_back(i * 0.002);
    const auto r = classify_regions(f);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const double phi = f.values[i];
      const int hits = (phi > 2.5 * eps) + (phi < -2.5 * eps) + (std::abs(phi) <= eps);
      CHECK(hits <= 1);
      CHECK((r.labels[i] == Region::Far) == (hits == 0));
      CHECK(r.inside_valve[i] == (phi < -eps));
    }
    CHECK(r.inside_valve[f.values.size() / 2 - 150]);  // phi = -1.5 eps
    f.epsilon = 0.0;
    CHECK_THROWS(classify_regions(f));
  }
}

TEST_SUITE("tps") {
  TEST_CASE("identical landmarks give the identity") {
    const auto src = random_points(8, 1.0, 1);
    const auto t = tps_fit(src, src);
    CHECK(t.radial.cwiseAbs().maxCoeff() < 1e-12);
    for (const auto& p : random_points(20, 2.0, 2)) CHECK((tps_apply(t, p) - p).norm() < 1e-12);
  }

  TEST_CASE("affine landmark maps are reproduced everywhere") {
    const auto src = random_points(10, 1.0, 3);
    Eigen::Matrix3d a;
    a << 1.1, 0.2, -0.1, 0.0, 0.9, 0.3, 0.05, -0.2, 1.2;
    const Vec3 shift(0.3, -1.2, 2.0);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(p + shift);
    const auto t = tps_fit(src, dst);
    for (const auto& p : random_points(50, 3.0, 4)) CHECK((tps_apply(t, p) - (p + shift)).norm() < 1e-9);
    dst.clear();
    for (const auto& p : src) dst.push_back(a * p + shift);
    const auto ta = tps_fit(src, dst);
    for (const auto& p : random_points(50, 3.0, 5)) CHECK((tps_apply(ta, p) - (a * p + shift)).norm() < 1e-9);
  }

  TEST_CASE("random landmark pairs are interpolated exactly") {
    const auto src = random_points(30, 1.0, 6), dst = random_points(30, 1.0, 7);
    const auto t = tps_fit(src, dst);
    const auto out = tps_apply(t, src);
    for (std::size_t i = 0; i < src.size(); ++i) CHECK((out[i] - dst[i]).norm() < 1e-9);
  }

  TEST_CASE("degenerate landmark sets are rejected") {
    const std::vector<Vec3> plane = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.2, 0}};
    CHECK_THROWS_AS(tps_fit(plane, plane), DegenerateLandmarksError);
    const std::vector<Vec3> three = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(tps_fit(three, three), DegenerateLandmarksError);
    std::vector<Vec3> dup = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 1}};
    CHECK_THROWS_AS(tps_fit(dup, dup), DegenerateLandmarksError);
  }
}
