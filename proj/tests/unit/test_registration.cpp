#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "heartflow/geometry/mesh.hpp"
#include "heartflow/registration/train.hpp"

using namespace heartflow::registration;
using heartflow::geometry::make_icosphere;
using heartflow::geometry::TriangleMesh;
using heartflow::geometry::Vec3;

namespace {

PointSet random_set(int n, unsigned seed, double half = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half, half);
  PointSet p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) << u(rng), u(rng), u(rng);
  return p;
}

// Octagonal bipyramid: 10 vertices, 16 outward faces.
TriangleMesh bipyramid(double rx, double rz, const Vec3& shift = Vec3::Zero()) {
  TriangleMesh m;
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 8.0;
    m.vertices.push_back(shift + Vec3(rx * std::cos(a), rx * std::sin(a), 0.0));
  }
  m.vertices.push_back(shift + Vec3(0, 0, rz));
  m.vertices.push_back(shift + Vec3(0, 0, -rz));
  for (int k = 0; k < 8; ++k) {
    m.faces.push_back({k, (k + 1) % 8, 8});
    m.faces.push_back({(k + 1) % 8, k, 9});
  }
  return m;
}

double brute_point_loss(const PointSet& p, const PointSet& g) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    double best = INFINITY;
    for (Eigen::Index j = 0; j < g.cols(); ++j) best = std::min(best, (p.col(i) - g.col(j)).squaredNorm());
    s += best;
  }
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    double best = INFINITY;
    for (Eigen::Index i = 0; i < p.cols(); ++i) best = std::min(best, (p.col(i) - g.col(j)).squaredNorm());
    s += best;
  }
  return s;
}

// Network whose velocity is exactly A p: each hidden layer carries (z, -z)
// pairs, and leaky(z) - leaky(-z) = 1.02 z.
VelocityNetwork linear_network(const Eigen::Matrix3d& a) {
  auto net = VelocityNetwork::zeros(6);
  for (int k = 0; k < 3; ++k) {
    net.weight(0)(2 * k, k) = 1.0;
    net.weight(0)(2 * k + 1, k) = -1.0;
  }
  for (int l = 1; l < kLayers - 1; ++l)
    for (int k = 0; k < 3; ++k) {
      net.weight(l)(2 * k, 2 * k) = 1.0;
      net.weight(l)(2 * k, 2 * k + 1) = -1.0;
      net.weight(l)(2 * k + 1, 2 * k) = -1.0;
      net.weight(l)(2 * k + 1, 2 * k + 1) = 1.0;
    }
  const double gain = std::pow(1.0 + kLeakySlope, kLayers - 1);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) {
      net.weight(kLayers - 1)(r, 2 * k) = a(r, k) / gain;
      net.weight(kLayers - 1)(r, 2 * k + 1) = -a(r, k) / gain;
    }
  return net;
}

template <class F>
double relative_fd_error(VelocityNetwork net, const Eigen::VectorXd& analytic, F&& loss, int probes,
                         unsigned seed) {
  const Eigen::VectorXd theta = net.parameters();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  Eigen::VectorXd a(probes), fd(probes);
  for (int k = 0; k < probes; ++k) {
    const Eigen::Index i = pick(rng);
    const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
    Eigen::VectorXd t = theta;
    t[i] += h;
    net.set_parameters(t);
    const double up = loss(net);
    t[i] -= 2 * h;
    net.set_parameters(t);
    const double down = loss(net);
    fd[k] = (up - down) / (2 * h);
    a[k] = analytic[i];
  }
  return (a - fd).norm() / fd.norm();
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("architecture constants") {
    const auto net = VelocityNetwork::initialized(1);
    CHECK(net.width() == 64);
    CHECK(net.weight(0).cols() == 4);
    CHECK(net.weight(kLayers - 1).rows() == 3);
    CHECK(kLayers == 6);
    CHECK(kLeakySlope == 0.02);
    CHECK(kEulerStep * kEulerSteps == doctest::Approx(1.0));
    auto copy = VelocityNetwork::zeros();
    copy.set_parameters(net.parameters());
    CHECK(copy.parameters() == net.parameters());
  }

  TEST_CASE("zero network is the identity, and so is a fresh initialised one") {
    const auto p = random_set(50, 1, 3.0);
    CHECK(integrate(VelocityNetwork::zeros(), p) == p);
    CHECK(integrate(VelocityNetwork::initialized(5), p) == p);
    CHECK(make_model(4, 3).apply(p) == p);
  }

  TEST_CASE("constant velocity field moves every point by c t_end") {
    auto net = VelocityNetwork::zeros();
    const Eigen::Vector3d c(0.5, -1.0, 2.0);
    net.bias(kLayers - 1) = c;
    const auto p = random_set(20, 2);
    for (double t_end : {0.2, 0.6, 1.0}) {
      const auto q = integrate(net, p, t_end);
      CHECK(((q - p).colwise() - c * t_end).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS(integrate(net, p, 0.3));
    CHECK_THROWS(integrate(net, p, 1.2));
  }

  TEST_CASE("linear field matches hand-iterated Euler") {
    Eigen::Matrix3d a;
    a << 0.3, -0.2, 0.1, 0.05, -0.4, 0.2, 0.0, 0.15, 0.25;
    const auto net = linear_network(a);
    const auto p = random_set(30, 3);
    PointSet oracle = p;
    for (int k = 0; k < 5; ++k) oracle = oracle + 0.2 * (a * oracle);
    CHECK((integrate(net, p) - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("backward pass matches finite differences of a scalar of the flow") {
    const auto net = VelocityNetwork::initialized(9, 16, 0.5);
    const auto p = random_set(12, 4);
    const PointSet w = random_set(12, 5);
    auto f = [&](const VelocityNetwork& n) { return (integrate(n, p).array() * w.array()).sum(); };
    const auto g = integrate_backward(net, p, w);
    CHECK(relative_fd_error(net, g, f, 200, 6) < 1e-6);
  }
}

TEST_SUITE("nearest") {
  TEST_CASE("grid search equals brute force, ties to the lowest index") {
    PointSet g = random_set(500, 7);
    g.col(400) = g.col(10);  // exact duplicate
    const NearestGrid grid(g);
    const auto q = random_set(2000, 8, 1.5);
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
      const auto a = grid.nearest(q.col(i)), b = nearest_brute_force(g, q.col(i));
      CHECK(a.index == b.index);
      CHECK(a.distance_sq == b.distance_sq);
    }
    CHECK(grid.nearest(g.col(400)).index == 10);
  }

  TEST_CASE("degenerate layouts") {
    PointSet line(3, 5);
    for (int i = 0; i < 5; ++i) line.col(i) << i, 0, 0;
    const NearestGrid grid(line);
    CHECK(grid.nearest(Eigen::Vector3d(2.4, 3, 0)).index == 2);
    PointSet one(3, 1);
    one.col(0) << 1, 1, 1;
    CHECK(NearestGrid(one).nearest(Eigen::Vector3d(-5, 0, 9)).index == 0);
  }
}

TEST_SUITE("losses") {
  TEST_CASE("point loss") {
    const auto p = random_set(100, 10), g = random_set(100, 11);
    CHECK(loss_point(p, p) == 0.0);
    PointSet a(3, 1), b(3, 1);
    a << 0, 0, 0;
    b << 1, 0, 0;
    CHECK(loss_point(a, b) == 2.0);
    CHECK(std::abs(loss_point(p, g) - brute_point_loss(p, g)) < 1e-12);
    CHECK(loss_point(p, g) == doctest::Approx(loss_point(g, p)).epsilon(1e-14));
  }

  TEST_CASE("normal loss") {
    const auto m = bipyramid(1.0, 1.0);
    const PointSet v = to_points(m.vertices);
    const auto inc = incident_edges(m.faces, 10);
    // Targets whose normals equal the incident cross products exactly.
    PointSet n(3, 10);
    for (int i = 0; i < 10; ++i) n.col(i) = (v.col(inc[i][0]) - v.col(i)).cross(v.col(inc[i][1]) - v.col(i));
    CHECK(loss_normal(v, inc, v, n).value == 0.0);

    PointSet single(3, 1), gn(3, 1);
    single << 0, 0, 0;
    gn << 0, 0, 1;
    const auto d = loss_normal(single, {{-1, -1}}, single, gn);
    CHECK(d.value == 1.0);
    CHECK(d.degenerate == 1);

    // Independent re-evaluation against random targets.
    const PointSet p = v + 0.1 * random_set(10, 12);
    const PointSet g = random_set(40, 13);
    PointSet gnorm = random_set(40, 14);
    gnorm.colwise().normalize();
    double oracle = 0.0;
    for (int i = 0; i < 10; ++i) {
      int best = 0;
      for (int j = 1; j < 40; ++j)
        if ((p.col(i) - g.col(j)).squaredNorm() < (p.col(i) - g.col(best)).squaredNorm()) best = j;
      const Eigen::Vector3d c = (p.col(inc[i][0]) - p.col(i)).cross(p.col(inc[i][1]) - p.col(i));
      oracle += (c - gnorm.col(best)).squaredNorm();
    }
    CHECK(std::abs(loss_normal(p, inc, g, gnorm).value - oracle) < 1e-12);
  }

  TEST_CASE("ARAP: zero at rest, invariant under rigid motion, one-edge scaling") {
    const auto m = make_icosphere(1.0, 2);
    const PointSet ref = to_points(m.vertices);
    const auto nb = cotangent_weights(ref, m.faces);
    CHECK(loss_arap(ref, ref, nb) <= 1e-12);  // SVD round-off only
    const PointSet def = ref + 0.05 * random_set(static_cast<int>(ref.cols()), 15);
    const double base = loss_arap(ref, def, nb);
    CHECK(base > 0.0);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -0.5).normalized()).toRotationMatrix();
    const PointSet moved = (rot * def).colwise() + Eigen::Vector3d(3, -1, 2);
    CHECK(std::abs(loss_arap(ref, moved, nb) - base) <= 1e-9);
    CHECK(loss_arap(ref, (rot * ref).colwise() + Eigen::Vector3d(1, 1, 1), nb) <= 1e-9);

    PointSet e(3, 2), e2(3, 2);
    e << 0, 1, 0, 0, 0, 0;
    e2 = 2.0 * e;
    ArapNeighbours pair;
    pair.adj = {{{1, 1.0}}, {}};
    CHECK(loss_arap(e, e2, pair) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((arap_rotation(e, e2, pair, 0) * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
  }

  TEST_CASE("Procrustes rotation corrects reflections") {
    const PointSet ref = random_set(6, 16);
    ArapNeighbours nb;
    nb.adj.resize(6);
    for (int j = 1; j < 6; ++j) nb.adj[0].push_back({j, 1.0});
    Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
    mirror(2, 2) = -1.0;
    const auto r = arap_rotation(ref, mirror * ref, nb, 0);
    CHECK(r.determinant() == doctest::Approx(1.0));
    CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }

  TEST_CASE("cotangent weights of a regular mesh are symmetric and non-negative") {
    const auto m = make_icosphere(1.0, 1);
    const PointSet v = to_points(m.vertices);
    const auto nb = cotangent_weights(v, m.faces);
    for (std::size_t i = 0; i < nb.adj.size(); ++i)
      for (const auto& [j, w] : nb.adj[i]) {
        CHECK(w >= 0.0);
        bool found = false;
        for (const auto& [k, w2] : nb.adj[j])
          if (k == static_cast<int>(i)) found = (w2 == w);
        CHECK(found);
      }
  }

  TEST_CASE("position gradients of each loss match finite differences") {
    const auto tm = bipyramid(1.0, 1.2);
    const auto gm = bipyramid(1.1, 1.4, {0.2, -0.1, 0.15});
    const PointSet ref = to_points(tm.vertices);
    const PointSet p = ref + 0.08 * random_set(10, 17);
    const PointSet g = to_points(gm.vertices);
    const PointSet gn = vertex_normals(g, gm.faces);
    const auto inc = incident_edges(tm.faces, 10);
    const auto nb = cotangent_weights(ref, tm.faces);
    std::vector<std::function<double(const PointSet&, PointSet*)>> losses = {
        [&](const PointSet& x, PointSet* gr) { return loss_point(x, g, gr); },
        [&](const PointSet& x, PointSet* gr) { return loss_normal(x, inc, g, gn, gr).value; },
        [&](const PointSet& x, PointSet* gr) { return loss_arap(ref, x, nb, gr); }};
    for (const auto& f : losses) {
      PointSet grad;
      f(p, &grad);
      PointSet fd(3, 10);
      for (int i = 0; i < 10; ++i)
        for (int a = 0; a < 3; ++a) {
          PointSet q = p;
          q(a, i) += 1e-6;
          const double up = f(q, nullptr);
          q(a, i) -= 2e-6;
          fd(a, i) = (up - f(q, nullptr)) / 2e-6;
        }
      CHECK((grad - fd).norm() / fd.norm() < 1e-6);
    }
  }

  TEST_CASE("geometric-mean total") {
    for (const auto& w : sample_weights(20, 3)) CHECK(loss_total(1, 1, 1, w) == doctest::Approx(1.0));
    CHECK(loss_total(7.5, 3, 2, {1, 0, 0}) == doctest::Approx(7.5));
    CHECK(loss_total(4, 9, 123, {0.5, 0.5, 0.0}) == doctest::Approx(6.0));
    CHECK(loss_total(0, 1, 1, {0.5, 0.5, 0}) == doctest::Approx(std::sqrt(kLossFloor)));
    const LossWeights w{0.2, 0.5, 0.3};
    CHECK(loss_total(3 * 2.0, 3 * 5.0, 3 * 0.7, w) == doctest::Approx(3 * loss_total(2.0, 5.0, 0.7, w)));
    CHECK_THROWS((LossWeights{0.5, 0.5, 0.1}.validate()));
    CHECK_THROWS((LossWeights{1.2, -0.2, 0.0}.validate()));
  }

  TEST_CASE("Dirichlet sampler") {
    const auto s = sample_weights(100000, 42);
    double mp = 0, mn = 0, ma = 0;
    for (const auto& w : s) {
      CHECK(std::abs(w.point + w.normal + w.arap - 1.0) <= 1e-12);
      CHECK(w.point >= 0.0);
      mp += w.point;
      mn += w.normal;
      ma += w.arap;
    }
    CHECK(std::abs(mp / 1e5 - 1.0 / 3.0) < 0.005);
    CHECK(std::abs(mn / 1e5 - 1.0 / 3.0) < 0.005);
    CHECK(std::abs(ma / 1e5 - 1.0 / 3.0) < 0.005);
    const auto again = sample_weights(100, 42);
    for (int i = 0; i < 100; ++i) {
      CHECK(again[i].point == s[i].point);
      CHECK(again[i].arap == s[i].arap);
    }
    CHECK_THROWS(sample_weights(0, 1));
  }
}

TEST_SUITE("training") {
  TEST_CASE("parameter gradients of each loss match central differences on a 10-vertex problem") {
    const auto tm = bipyramid(1.0, 1.2);
    const auto gm = bipyramid(1.1, 1.4, {0.2, -0.1, 0.15});
    const PointSet ref = to_points(tm.vertices);
    const auto net = VelocityNetwork::initialized(21, 64, 0.3);
    const std::vector<LossWeights> cases = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.3, 0.4, 0.3}};
    for (const auto& w : cases) {
      const ModuleObjective obj(ref, tm.faces, gm, w);
      const auto loss = obj.evaluate(integrate(net, ref));
      const auto g = integrate_backward(net, ref, loss.grad);
      auto f = [&](const VelocityNetwork& n) { return obj.evaluate(integrate(n, ref), false).value.total; };
      CHECK(relative_fd_error(net, g, f, 300, 22) < 1e-4);
    }
  }

  TEST_CASE("baseline equal to target converges at iteration 0") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 1);
    p.targets = {p.baseline};
    const auto r = train(p, {});
    CHECK(r.converged);
    CHECK(r.iterations[0] == 0);
    CHECK(r.trace.size() == 1);
    CHECK(r.frames[0] == to_points(p.baseline.vertices));
  }

  TEST_CASE("training reduces the Chamfer distance and keeps the best parameters") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 1);
    p.targets = {make_icosphere(1.0, 1, {0.2, 0, 0}), make_icosphere(1.0, 1, {0.3, 0.1, 0})};
    p.options.max_iterations = 60;
    p.options.width = 16;
    p.options.learning_rate = 3e-3;
    p.options.chamfer_tolerance = 0.0;
    const auto r = train(p, {0.3, 0.4, 0.3});
    REQUIRE(r.frames.size() == 2);
    CHECK_FALSE(r.converged);
    for (int m = 0; m < 2; ++m) {
      double first = -1, best = INFINITY;
      for (const auto& t : r.trace)
        if (t.module == m) {
          if (first < 0) first = t.chamfer_rms;
          best = std::min(best, t.chamfer_rms);
        }
      CHECK(best < first);
      CHECK(r.final_chamfer[m] == best);
      CHECK(chamfer_rms(r.frames[m], to_points(p.targets[m].vertices)) == doctest::Approx(best).epsilon(1e-12));
    }
    CHECK(r.model.apply(to_points(p.baseline.vertices)) == r.frames[1]);
  }

  TEST_CASE("non-finite losses abort with the iteration index") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 1);
    auto bad = make_icosphere(1.0, 1);
    bad.vertices[3].x() = 1e300;
    p.targets = {bad};
    try {
      train(p, {});
      FAIL("expected throw");
    } catch (const RegistrationError& e) {
      CHECK(e.iteration() == 0);
      CHECK(e.module() == 0);
    }
  }

  TEST_CASE("identical seeds give bit-identical training") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 1);
    p.targets = {make_icosphere(1.1, 1)};
    p.options.max_iterations = 10;
    p.options.width = 8;
    const auto a = train(p, {}), b = train(p, {});
    CHECK(a.frames[0] == b.frames[0]);
    CHECK(a.trace.back().loss.total == b.trace.back().loss.total);
  }

  TEST_CASE("sphere to ellipsoid: trajectories do not cross") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 2);
    auto ell = p.baseline;
    for (auto& v : ell.vertices) v.z() *= 1.4;
    p.targets = {ell};
    p.options.max_iterations = 150;
    p.options.width = 32;
    p.options.learning_rate = 3e-3;
    const auto r = train(p, {0.3, 0.4, 0.3});
    CHECK(r.final_chamfer[0] < r.trace.front().chamfer_rms);
    const auto rep = check_non_crossing(r.model, to_points(p.baseline.vertices));
    CHECK(rep.violations == 0);
  }

  TEST_CASE("crossing detector flags swapped neighbours") {
    DeformationModel m;
    m.modules.push_back(VelocityNetwork::zeros(4));
    // Constant velocity cannot swap anything.
    m.modules[0].bias(kLayers - 1) << 1.0, 0.0, 0.0;
    PointSet p(3, 2);
    p << 0, 0.1, 0, 0, 0, 0;
    CHECK(check_non_crossing(m, p).violations == 0);
    // v = -10 x collapses the pair through itself within a step.
    m.modules[0] = linear_network((Eigen::Matrix3d() << -10, 0, 0, 0, 0, 0, 0, 0, 0).finished());
    const auto rep = check_non_crossing(m, p);
    CHECK(rep.violations > 0);
    CHECK(rep.first_step == 0);
  }

  TEST_CASE("weight search picks the lowest Chamfer entry") {
    RegistrationProblem p;
    p.baseline = make_icosphere(1.0, 1);
    p.targets = {make_icosphere(1.0, 1, {0.1, 0, 0})};
    p.options.width = 8;
    const auto s = weight_search(p, 4, 5, 5);
    REQUIRE(s.entries.size() == 4);
    for (const auto& e : s.entries) CHECK(s.entries[s.best].mean_chamfer <= e.mean_chamfer);
    const auto w = sample_weights(4, 5);
    CHECK(s.entries[2].weights.point == w[2].point);
  }
}
