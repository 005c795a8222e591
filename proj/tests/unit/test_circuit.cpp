#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "heartflow/circuit.hpp"

using namespace heartflow::circuit;

namespace {

LpnParameters healthy() {
  LpnParameters p;
  p.r_ar_sys = 0.677; p.c_ar_sys = 0.925; p.l_ar_sys = 0.005;
  p.r_ven_sys = 0.064; p.c_ven_sys = 60.0; p.l_ven_sys = 0.0005;
  p.r_ar_pul = 0.032; p.c_ar_pul = 10.0; p.l_ar_pul = 0.0005;
  p.r_ven_pul = 0.035; p.c_ven_pul = 16.0; p.l_ven_pul = 0.0005;
  p.r_min = 0.002;
  return p;
}

LpnState healthy_init() { return {87.25, 14.703, 17.73, 13.83, 110.9, 123.5}; }

LpnParameters chd() {
  LpnParameters p;
  p.r_ar_sys = 1.578; p.c_ar_sys = 0.290; p.l_ar_sys = 0.6;
  p.r_ven_sys = 0.315; p.c_ven_sys = 120.0; p.l_ven_sys = 5e-5;
  p.r_ar_pul = 0.136; p.c_ar_pul = 4.0; p.l_ar_pul = 0.02;
  p.r_ven_pul = 0.05; p.c_ven_pul = 160.0; p.l_ven_pul = 1.25e-5;
  p.r_min = 0.002;
  return p;
}

LpnState chd_init() { return {60.0, 7.70, 11.50, 10.0, 40.0, 35.0}; }

// State-space matrix of the circuit with all boundary flows held at zero,
// written directly from the compartment balances.
Eigen::Matrix<double, 6, 6> free_system_matrix(const LpnParameters& p) {
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  a(0, 4) = -1.0 / p.c_ar_sys;
  a(1, 4) = 1.0 / p.c_ven_sys;
  a(2, 5) = -1.0 / p.c_ar_pul;
  a(3, 5) = 1.0 / p.c_ven_pul;
  a(4, 4) = -p.r_ar_sys / p.l_ar_sys;
  a(4, 0) = 1.0 / p.l_ar_sys;
  a(4, 1) = -1.0 / p.l_ar_sys;
  a(5, 5) = -p.r_ar_pul / p.l_ar_pul;
  a(5, 2) = 1.0 / p.l_ar_pul;
  a(5, 3) = -1.0 / p.l_ar_pul;
  return a;
}

Eigen::Matrix<double, 6, 1> as_vector(const LpnState& s) {
  Eigen::Matrix<double, 6, 1> v;
  for (int i = 0; i < 6; ++i) v[i] = s[i];
  return v;
}

const FlowProvider kZeroFlows = [](double, const LpnState&) { return BoundaryFlows{}; };

}  // namespace

TEST_CASE("lpn_rhs: balanced flows give zero capacitor-pressure derivatives") {
  LpnState s{90.0, 10.0, 20.0, 8.0, 75.0, 75.0};
  BoundaryFlows f;
  f.q_ao = 75.0; f.q_ven_sys = 75.0; f.q_pa = 75.0; f.q_ven_pul = 75.0;
  auto d = lpn_rhs(s, f, healthy());
  CHECK(d.p_ar_sys == 0.0);
  CHECK(d.p_ven_sys == 0.0);
  CHECK(d.p_ar_pul == 0.0);
  CHECK(d.p_ven_pul == 0.0);
}

TEST_CASE("lpn_rhs: healthy initial systemic arterial pressure slope") {
  auto d = lpn_rhs(healthy_init(), BoundaryFlows{}, healthy());
  CHECK(d.p_ar_sys == doctest::Approx(-110.9 / 0.925).epsilon(1e-14));
  CHECK(d.p_ar_sys == doctest::Approx(-119.89).epsilon(1e-4));
}

TEST_CASE("lpn_rhs: CHD initial conditions against exact rational evaluation") {
  BoundaryFlows f;
  f.q_ao = 50.0; f.q_pa = 30.0; f.q_ven_sys = 45.0; f.q_ven_pul = 38.0;
  auto d = lpn_rhs(chd_init(), f, chd());
  // Frozen from an exact-fraction evaluation of the six balance equations.
  CHECK(d.p_ar_sys == doctest::Approx(34.48275862068966).epsilon(1e-14));
  CHECK(d.p_ven_sys == doctest::Approx(-0.041666666666666664).epsilon(1e-14));
  CHECK(d.p_ar_pul == doctest::Approx(-1.25).epsilon(1e-14));
  CHECK(d.p_ven_pul == doctest::Approx(-0.01875).epsilon(1e-14));
  CHECK(d.q_ar_sys == doctest::Approx(-18.033333333333335).epsilon(1e-13));
  CHECK(d.q_ar_pul == doctest::Approx(-163.0).epsilon(1e-13));
}

TEST_CASE("lpn_rhs: non-finite input is rejected naming the field") {
  LpnState s = healthy_init();
  s.p_ven_pul = std::nan("");
  try {
    lpn_rhs(s, BoundaryFlows{}, healthy());
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("p_ven_pul") != std::string::npos);
  }
  BoundaryFlows f;
  f.q_pa = INFINITY;
  CHECK_THROWS_WITH_AS(lpn_rhs(healthy_init(), f, healthy()),
                       doctest::Contains("q_pa"), std::invalid_argument);
}

TEST_CASE("lpn_rhs is linear in the state when flows are zero") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 150.0);
  for (int trial = 0; trial < 20; ++trial) {
    LpnState s1, s2;
    for (int i = 0; i < 6; ++i) { s1[i] = u(rng); s2[i] = u(rng); }
    const double a = u(rng) / 50.0, b = u(rng) / 50.0;
    auto lhs = lpn_rhs(a * s1 + b * s2, BoundaryFlows{}, healthy());
    auto rhs = a * lpn_rhs(s1, BoundaryFlows{}, healthy()) + b * lpn_rhs(s2, BoundaryFlows{}, healthy());
    for (int i = 0; i < 6; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("parameter validation lists every violation") {
  LpnParameters p = healthy();
  p.r_ar_sys = 0.0;
  p.c_ven_pul = -1.0;
  p.l_ven_sys = -0.1;
  try {
    p.validate();
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("r_ar_sys") != std::string::npos);
    CHECK(msg.find("c_ven_pul") != std::string::npos);
    CHECK(msg.find("l_ven_sys") != std::string::npos);
  }
  CHECK_NOTHROW(healthy().validate());
}

TEST_CASE("rk4_step: zero flows at an equilibrium leave the state unchanged") {
  LpnState s{12.0, 12.0, 7.0, 7.0, 0.0, 0.0};
  auto next = rk4_step(s, kZeroFlows, healthy(), 0.0, 1e-3);
  CHECK(next == s);
}

TEST_CASE("rk4_step: rejects non-positive dt and propagates provider failure") {
  CHECK_THROWS_AS(rk4_step(healthy_init(), kZeroFlows, healthy(), 0.0, 0.0), std::invalid_argument);
  int calls = 0;
  FlowProvider failing = [&](double, const LpnState&) -> BoundaryFlows {
    if (++calls == 3) throw std::runtime_error("provider failed");
    return {};
  };
  CHECK_THROWS_WITH(rk4_step(healthy_init(), failing, healthy(), 0.0, 1e-3), "provider failed");
}

TEST_CASE("rk4_step: stage times are t, t+dt/2, t+dt/2, t+dt") {
  std::vector<double> seen;
  FlowProvider rec = [&](double t, const LpnState&) {
    seen.push_back(t);
    return BoundaryFlows{};
  };
  rk4_step(healthy_init(), rec, healthy(), 2.0, 0.1);
  REQUIRE(seen.size() == 4);
  CHECK(seen[0] == 2.0);
  CHECK(seen[1] == doctest::Approx(2.05));
  CHECK(seen[2] == doctest::Approx(2.05));
  CHECK(seen[3] == doctest::Approx(2.1));
}

TEST_CASE("rk4_step: fourth-order convergence against the matrix-exponential solution") {
  const LpnParameters p = healthy();
  const LpnState y0 = healthy_init();
  const double t_end = 0.1;
  const Eigen::Matrix<double, 6, 1> exact = (free_system_matrix(p) * t_end).exp() * as_vector(y0);

  std::vector<double> errors;
  for (double dt : {1e-3, 5e-4, 2.5e-4}) {
    LpnState y = y0;
    const int n = static_cast<int>(std::lround(t_end / dt));
    for (int k = 0; k < n; ++k) y = rk4_step(y, kZeroFlows, p, k * dt, dt);
    errors.push_back((as_vector(y) - exact).norm());
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    MESSAGE("observed order " << order);
    CHECK(order >= 3.9);
  }
}

TEST_CASE("rk4_step: one fluid step matches a 1000-substep oracle") {
  const LpnParameters p = healthy();
  const double dt = 6.896e-4;
  LpnState coarse = rk4_step(healthy_init(), kZeroFlows, p, 0.0, dt);
  LpnState fine = healthy_init();
  for (int k = 0; k < 1000; ++k) fine = rk4_step(fine, kZeroFlows, p, k * dt / 1000, dt / 1000);
  // Capacitor pressures agree to 1e-10; the fast arterial-flow mode carries
  // the one-step truncation error (h*lambda ~ 0.09, local error ~1e-9).
  for (int i = 0; i < 4; ++i) CHECK(std::abs(coarse[i] - fine[i]) / std::abs(fine[i]) < 1e-10);
  for (int i = 4; i < 6; ++i) CHECK(std::abs(coarse[i] - fine[i]) / std::abs(fine[i]) < 2e-9);
}

TEST_CASE("boundary_pressures: zero flows pass compartment pressures through") {
  auto b = boundary_pressures(healthy_init(), BoundaryFlows{}, healthy());
  CHECK(b.p_la_in == 13.83);
  CHECK(b.p_ra_in == 14.703);
  CHECK(b.p_ao_out == 87.25);
  CHECK(b.p_pa_out == 17.73);
}

TEST_CASE("boundary_pressures: aortic outlet coupling resistance") {
  LpnParameters p = healthy();
  p.r_min = 0.01;
  LpnState s = healthy_init();
  s.p_ar_sys = 100.0;
  BoundaryFlows f;
  f.q_ao = 50.0;
  CHECK(boundary_pressures(s, f, p).p_ao_out == doctest::Approx(100.5).epsilon(1e-15));
}

TEST_CASE("boundary_pressures: CHD values with venous flow derivatives") {
  BoundaryFlows f;
  f.q_ao = 50.0; f.q_pa = 30.0; f.q_ven_sys = 45.0; f.q_ven_pul = 38.0;
  f.dq_ven_sys_dt = 120.0; f.dq_ven_pul_dt = -80.0;
  auto b = boundary_pressures(chd_init(), f, chd());
  CHECK(b.p_la_in == doctest::Approx(8.025).epsilon(1e-14));
  CHECK(b.p_ra_in == doctest::Approx(-6.571).epsilon(1e-14));
  CHECK(b.p_ao_out == doctest::Approx(60.1).epsilon(1e-14));
  CHECK(b.p_pa_out == doctest::Approx(11.56).epsilon(1e-14));
}

TEST_CASE("FlowSeries: interpolation and finite-difference venous derivatives") {
  std::vector<double> t{0.0, 0.1, 0.2, 0.4};
  std::vector<double> q{0.0, 1.0, 4.0, 16.0};
  FlowSeries s(t, q, q, q, q);
  auto f = s.at(0.15);
  CHECK(f.q_ao == doctest::Approx(2.5));
  CHECK(s.at(0.0).dq_ven_sys_dt == doctest::Approx(10.0));            // forward
  CHECK(s.at(0.1).dq_ven_pul_dt == doctest::Approx(20.0));            // centred
  CHECK(s.at(0.2).dq_ven_pul_dt == doctest::Approx(15.0 / 0.3));      // centred, uneven
  CHECK(s.at(0.4).dq_ven_sys_dt == doctest::Approx(60.0));            // backward
  CHECK_THROWS(FlowSeries({0.0, 0.0}, {1, 1}, {1, 1}, {1, 1}, {1, 1}));
}

TEST_CASE("periodic forcing converges to a periodic orbit") {
  const LpnParameters p = healthy();
  const double period = 0.69, dt = period / 1000;
  FlowProvider pulsatile = [&](double t, const LpnState&) {
    BoundaryFlows f;
    const double phase = std::fmod(t, period) / period;
    const double ej = phase < 0.35 ? std::sin(M_PI * phase / 0.35) : 0.0;
    f.q_ao = 300.0 * ej;
    f.q_pa = 300.0 * ej;
    f.q_ven_sys = f.q_ven_pul = 300.0 * 0.35 * 2.0 / M_PI;
    return f;
  };
  LpnState y = healthy_init();
  std::vector<std::vector<LpnState>> cycles;
  for (int c = 0; c < 8; ++c) {
    std::vector<LpnState> cyc;
    for (int k = 0; k < 1000; ++k) {
      cyc.push_back(y);
      y = rk4_step(y, pulsatile, p, (c * 1000 + k) * dt, dt);
    }
    cycles.push_back(std::move(cyc));
  }
  std::vector<double> diffs;
  for (std::size_t c = 1; c < cycles.size(); ++c) {
    double m = 0.0;
    for (int k = 0; k < 1000; ++k)
      for (int i = 0; i < 6; ++i) m = std::max(m, std::abs(cycles[c][k][i] - cycles[c - 1][k][i]));
    diffs.push_back(m);
  }
  for (std::size_t i = 2; i < diffs.size(); ++i) CHECK(diffs[i] < diffs[i - 1]);
}
