#include <random>

#include "doctest.h"
#include "dtnlab/wave.hpp"
#include "test_util.hpp"

using namespace dtnlab;

namespace {

// C-infinity time ramp bump centered at tc with half-width w
double time_bump(double t, double tc, double w) {
  double q = (t - tc) / w;
  return bump_eta(q * q);
}
double time_bump_prime(double t, double tc, double w) {
  double q = (t - tc) / w;
  return bump_eta_prime(q * q) * 2.0 * q / w;
}

// C^3 window with gentle high derivatives, for trace-accuracy tests
double sin4_window(double t, double period) {
  if (t <= 0.0 || t >= period) return 0.0;
  double s = std::sin(M_PI * t / period);
  return s * s * s * s;
}
double sin4_window_prime(double t, double period) {
  if (t <= 0.0 || t >= period) return 0.0;
  double w = M_PI / period;
  double s = std::sin(w * t), c = std::cos(w * t);
  return 4.0 * w * s * s * s * c;
}

BoundarySource plane_source(double tc, double w) {
  BoundarySource src;
  src.patch = "gamma0";
  src.t0 = 0.0;
  src.t1 = 1e9;
  src.f = [tc, w](double, double t) { return complexd(time_bump(t, tc, w)); };
  return src;
}

// sin^4 space window [sc - sw, sc + sw] times a sin^4 time window (0, tp)
BoundarySource bump_source(double sc, double sw, double tp) {
  BoundarySource src;
  src.patch = "gamma0";
  src.t0 = 0.0;
  src.t1 = 1e9;
  src.f = [=](double s, double t) {
    return complexd(sin4_window(s - sc + sw, 2 * sw) * sin4_window(t, tp));
  };
  return src;
}

}  // namespace

TEST_CASE("d'Alembert: lateral-periodic plane wave and its trace") {
  const int n = 128;
  Domain d = Domain::unit_square(n, 0.0, 1.0, /*periodic_x=*/true);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  const double P = 0.85, T0 = 0.9;
  BoundarySource src;
  src.patch = "gamma0";
  src.t0 = 0.0;
  src.t1 = 1e9;
  src.f = [P](double, double t) { return complexd(sin4_window(t, P)); };
  // solution is x1-uniform, so the 1-D stability bound applies and a near-unit
  // Courant number all but removes the leapfrog dispersion error
  WaveField u = solve_ibvp(spec, src, T0, 0.98);

  // field matches s(t - x2) below the front
  double num = 0, den = 0;
  int m = u.n_steps() - 1;
  double t = u.time(m);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      double exact = sin4_window(t - d.x2(j), P);
      num += std::norm(u.steps[m](i, j) - exact);
      den += exact * exact;
    }
  CHECK(std::sqrt(num / den) < 5e-3);

  // Neumann trace on the source edge equals s'(t)
  NeumannTrace tr = neumann_trace(spec, u, "gamma0");
  double tnum = 0, tden = 0;
  for (int mm = 0; mm < tr.steps(); ++mm) {
    double sp = sin4_window_prime(mm * tr.dt, P);
    for (int k = 0; k < tr.values.rows(); ++k) {
      tnum += std::norm(tr.values(k, mm) - sp);
      tden += sp * sp;
    }
  }
  CHECK(std::sqrt(tnum / tden) < 3e-3);
}

TEST_CASE("zero source gives the zero field and zero trace") {
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  BoundarySource src;
  src.patch = "gamma0";
  src.t1 = 1.0;
  src.f = [](double, double) { return complexd(0.0); };
  WaveField u = solve_ibvp(spec, src, 0.5);
  for (const auto& lev : u.steps) CHECK(lev.abs().maxCoeff() == 0.0);
  NeumannTrace tr = neumann_trace(spec, u, "gamma0");
  CHECK(tr.values.norm() == 0.0);
}

TEST_CASE("Richardson self-convergence at second order") {
  std::mt19937_64 rng(3);
  CoefficientSet c = testutil::random_spec(rng, 0.15, 0.0);
  const double T0 = 0.5;
  auto src = bump_source(0.5, 0.3, 0.45);

  std::vector<int> ns = {33, 65, 129};
  std::vector<CGrid> finals;
  for (int n : ns) {
    Domain d = Domain::unit_square(n);
    auto spec = OperatorSpec::from_closures(d, c);
    WaveField u = solve_ibvp(spec, src, T0, 0.4);
    finals.push_back(u.steps.back());
  }
  // sample on the coarsest grid nodes; errors vs finest should shrink ~4x
  auto err_vs_finest = [&](int lev) {
    int stride = (ns[2] - 1) / (ns[lev] - 1);
    double e = 0.0;
    for (int j = 0; j < ns[lev]; ++j)
      for (int i = 0; i < ns[lev]; ++i)
        e = std::max(e,
                     std::abs(finals[lev](i, j) - finals[2](i * stride, j * stride)));
    return e;
  };
  double e0 = err_vs_finest(0), e1 = err_vs_finest(1);
  CHECK(e0 / e1 > 2.5);  // ~4 for clean second order (e1 is vs a 2x finer grid)
}

TEST_CASE("constant magnetic potential shifts the trace by i a nu1 u") {
  const double a = 0.8;
  Domain d = Domain::unit_square(33);
  CoefficientSet flat = CoefficientSet::flat();
  CoefficientSet mag = CoefficientSet::flat();
  mag.A1 = [a](double, double) { return complexd(a); };
  auto s0 = OperatorSpec::from_closures(d, flat);
  auto s1 = OperatorSpec::from_closures(d, mag);

  std::mt19937_64 rng(5);
  WaveField u;
  u.dt = 0.1;
  CGrid lev = testutil::random_complex_grid(rng, d.nx, d.ny);
  u.steps.push_back(CGrid(lev.real().cast<complexd>()));  // real field

  NeumannTrace t0 = neumann_trace(s0, u, "right");
  NeumannTrace t1 = neumann_trace(s1, u, "right");
  const auto& nodes = d.patch("right").nodes;
  for (size_t k = 0; k < nodes.size(); ++k) {
    complexd expect = I_UNIT * a * nodes[k].nu1 * u.steps[0](nodes[k].i, nodes[k].j);
    CHECK(std::abs(t1.values(k, 0) - t0.values(k, 0) - expect) < 1e-12);
  }
}

TEST_CASE("dtn_map: empty list, linearity, order preservation") {
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  CHECK(dtn_map(spec, "gamma0", "gamma0", {}, 0.5).empty());

  auto f1 = bump_source(0.35, 0.18, 0.3);
  auto f2 = bump_source(0.6, 0.2, 0.35);
  const complexd al(0.7, 0.2), be(-0.4, 0.5);
  BoundarySource fsum;
  fsum.patch = "gamma0";
  fsum.t1 = 1e9;
  fsum.f = [=](double s, double t) { return al * f1.f(s, t) + be * f2.f(s, t); };

  auto traces = dtn_map(spec, "gamma0", "gamma0", {f1, f2, fsum}, 0.5);
  REQUIRE(traces.size() == 3);
  Eigen::MatrixXcd lin = al * traces[0].values + be * traces[1].values;
  CHECK((lin - traces[2].values).norm() < 1e-10 * lin.norm());
}

TEST_CASE("energy drift below 1% after the source switches off") {
  std::mt19937_64 rng(9);
  CoefficientSet c = testutil::random_spec(rng, 0.15, 0.3);
  Domain d = Domain::unit_square(65);
  auto spec = OperatorSpec::from_closures(d, c);
  REQUIRE(spec.selfadjoint);
  auto src = bump_source(0.5, 0.2, 0.3);  // off by t = 0.3
  WaveField u = solve_ibvp(spec, src, 0.9, 0.4);

  int m_on = static_cast<int>(0.35 / u.dt);
  double e_ref = discrete_energy(spec, u.steps[m_on], u.steps[m_on + 1], u.dt);
  REQUIRE(e_ref > 0.0);
  for (int m = m_on; m + 1 < u.n_steps(); m += 7) {
    double e = discrete_energy(spec, u.steps[m], u.steps[m + 1], u.dt);
    CHECK(std::abs(e - e_ref) < 0.01 * e_ref);
  }
}

TEST_CASE("finite propagation speed in the flat metric") {
  Domain d = Domain::unit_square(97);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  auto src = bump_source(0.5, 0.18, 0.3);  // space support [0.32, 0.68]
  WaveField u = solve_ibvp(spec, src, 0.6, 0.4);
  double umax = 0.0;
  for (const auto& lev : u.steps) umax = std::max(umax, lev.abs().maxCoeff());
  for (int m = 0; m < u.n_steps(); ++m) {
    double t = u.time(m);
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        double dx = std::max({0.32 - d.x1(i), d.x1(i) - 0.68, 0.0});
        double dist = std::hypot(dx, d.x2(j));
        if (dist > t + 3 * d.h)  // discrete light-cone widening
          CHECK(std::abs(u.steps[m](i, j)) < 1e-3 * umax);
      }
  }
}

TEST_CASE("CFL violation is rejected") {
  Domain d = Domain::unit_square(17);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  BoundarySource src;
  src.patch = "gamma0";
  src.t1 = 1.0;
  src.f = [](double, double t) { return complexd(time_bump(t, 0.3, 0.2)); };
  CHECK_THROWS_AS(solve_ibvp(spec, src, 0.5, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(solve_ibvp(spec, src, 0.5, 0.0), std::invalid_argument);
}
