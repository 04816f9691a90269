#include <random>

#include "doctest.h"
#include "dtnlab/gauge.hpp"
#include "test_util.hpp"

using namespace dtnlab;

namespace {

complexd bil(const CGrid& f, const Domain& d, double x, double y) {
  double u = x / d.h, v = y / d.h;
  int i = std::clamp(static_cast<int>(std::floor(u)), 0, d.nx - 2);
  int j = std::clamp(static_cast<int>(std::floor(v)), 0, d.ny - 2);
  double a = u - i, b = v - j;
  return (1.0 - a) * (1.0 - b) * f(i, j) + a * (1.0 - b) * f(i + 1, j) +
         (1.0 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

}  // namespace

TEST_CASE("identity gauge element leaves the operator unchanged") {
  std::mt19937_64 rng(1);
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng));
  auto out = gauge_transform_operator(spec, GaugeElement::identity());
  CHECK((out.A1 - spec.A1).abs().maxCoeff() < 1e-12);
  CHECK((out.A2 - spec.A2).abs().maxCoeff() < 1e-12);
  CHECK((out.g11 - spec.g11).abs().maxCoeff() == 0.0);
  CHECK((out.V - spec.V).abs().maxCoeff() == 0.0);
}

TEST_CASE("linear phase shifts A by a constant") {
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  const double a1 = 0.9, a2 = -0.4;
  auto g = GaugeElement::phase(
      [a1, a2](double x, double y) { return a1 * x + a2 * y; });
  auto out = gauge_transform_operator(spec, g);
  CHECK((out.A1 - complexd(a1)).abs().maxCoeff() < 1e-9);
  CHECK((out.A2 - complexd(a2)).abs().maxCoeff() < 1e-9);
  CHECK(out.selfadjoint);
}

TEST_CASE("random phase: probed coefficients match A + grad theta") {
  std::mt19937_64 rng(11);
  auto th = testutil::smooth_field(rng, 0.8);
  Domain d = Domain::unit_square(65);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng, 0.15, 0.3));
  auto out = gauge_transform_operator(spec, GaugeElement::phase(th));
  REQUIRE(out.selfadjoint);
  auto p = probe_coefficients(out);
  const double tol = 10 * d.h * d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      if (!p.valid(i, j)) continue;
      double x = d.x1(i), y = d.x2(j);
      complexd e1 = spec.A1(i, j) + fd_partial(th, x, y, 0);
      complexd e2 = spec.A2(i, j) + fd_partial(th, x, y, 1);
      CHECK(std::abs(p.A1(i, j) - e1) < tol);
      CHECK(std::abs(p.A2(i, j) - e2) < tol);
    }
}

TEST_CASE("vanishing gauge element is rejected") {
  Domain d = Domain::unit_square(17);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  GaugeElement bad;
  bad.c = [](double x, double) { return complexd(x - 0.5); };
  CHECK_THROWS_AS(gauge_transform_operator(spec, bad), std::invalid_argument);
}

TEST_CASE("gauge solution transform: pointwise division") {
  std::mt19937_64 rng(2);
  Domain d = Domain::unit_square(33);
  CGrid u = testutil::random_complex_grid(rng, d.nx, d.ny);
  CHECK((gauge_transform_solution(u, d, GaugeElement::identity()) - u)
            .abs()
            .maxCoeff() == 0.0);
  auto g = GaugeElement::phase(testutil::smooth_field(rng, 1.0));
  CGrid v = gauge_transform_solution(u, d, g);
  CHECK((v.abs() - u.abs()).abs().maxCoeff() < 1e-12);  // unimodular
  CHECK_THROWS_AS(gauge_transform_solution(CGrid::Zero(5, 5), d, g),
                  std::invalid_argument);
}

TEST_CASE("gauge correspondence: L'(c^{-1}u) = c^{-1}(Lu) to O(h^2)") {
  std::mt19937_64 rng(5);
  CoefficientSet base = testutil::random_spec(rng, 0.15, 0.3);
  auto th = testutil::smooth_field(rng, 0.8);
  auto uf = testutil::smooth_field(rng, 1.0);
  GaugeElement ge = GaugeElement::phase(th);
  std::vector<double> errs;
  for (int n : {33, 65}) {
    Domain d = Domain::unit_square(n);
    auto s = OperatorSpec::from_closures(d, base);
    auto sp = gauge_transform_operator(s, ge);
    CGrid u(d.nx, d.ny);
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        u(i, j) = complexd(uf(d.x1(i), d.x2(j)), 0.3 * uf(d.x2(j), d.x1(i)));
    CGrid lhs = apply_spatial_operator(sp, gauge_transform_solution(u, d, ge));
    CGrid rhs = gauge_transform_solution(apply_spatial_operator(s, u), d, ge);
    double w = 0.0;
    for (int j = 1; j < d.ny - 1; ++j)
      for (int i = 1; i < d.nx - 1; ++i)
        w = std::max(w, std::abs(lhs(i, j) - rhs(i, j)));
    errs.push_back(w);
  }
  CHECK(errs[0] < 0.02);
  CHECK(errs[1] < 0.005);
  CHECK(errs[0] / errs[1] > 3.0);
}

TEST_CASE("group law: sequential transforms equal the product element") {
  std::mt19937_64 rng(7);
  auto t1 = testutil::smooth_field(rng, 0.6);
  auto t2 = testutil::smooth_field(rng, 0.7);
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng, 0.1, 0.2));
  auto two = gauge_transform_operator(
      gauge_transform_operator(spec, GaugeElement::phase(t1)),
      GaugeElement::phase(t2));
  auto prod = gauge_transform_operator(
      spec, GaugeElement::phase([t1, t2](double x, double y) {
        return t1(x, y) + t2(x, y);
      }));
  CHECK((two.A1 - prod.A1).abs().maxCoeff() < 1e-9);
  CHECK((two.A2 - prod.A2).abs().maxCoeff() < 1e-9);
}

TEST_CASE("identity diffeo leaves the operator unchanged") {
  std::mt19937_64 rng(3);
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng));
  auto out = pullback_operator(spec, Diffeo::identity());
  CHECK((out.g11 - spec.g11).abs().maxCoeff() < 1e-12);
  CHECK((out.g12 - spec.g12).abs().maxCoeff() < 1e-12);
  CHECK((out.A1 - spec.A1).abs().maxCoeff() < 1e-12);
  CHECK((out.V - spec.V).abs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation is an isometry of the flat metric") {
  CoefficientSet c = CoefficientSet::flat();
  RadialBump b{0.5, 0.5, 0.2};
  c.V = [b](double x, double y) { return complexd(b.value(x, y)); };
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, c);
  Diffeo rot = Diffeo::rotation(Vec2(0.5, 0.5), 0.7);
  auto out = pullback_operator(spec, rot);
  CHECK((out.g11 - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(out.g12.abs().maxCoeff() < 1e-12);
  CHECK((out.g22 - 1.0).abs().maxCoeff() < 1e-12);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      Vec2 q = rot.fwd(Vec2(d.x1(i), d.x2(j)));
      CHECK(std::abs(out.V(i, j) - complexd(b.value(q(0), q(1)))) < 1e-12);
    }
}

TEST_CASE("diffeo inverse and Jacobian are consistent") {
  Diffeo phi = Diffeo::bump_displacement(Vec2(0.5, 0.55), 0.3, Vec2(0.6, 0.4), 0.08);
  CHECK(phi.identity_on_gamma0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    Vec2 x(u(rng), u(rng));
    CHECK((phi.inv(phi.fwd(x)) - x).norm() < 1e-10);
    CHECK(phi.jac(x).determinant() > 0.0);
    // Jacobian vs finite differences of the forward map
    const double e = 1e-6;
    Mat2 fd;
    fd.col(0) = (phi.fwd(x + Vec2(e, 0)) - phi.fwd(x - Vec2(e, 0))) / (2 * e);
    fd.col(1) = (phi.fwd(x + Vec2(0, e)) - phi.fwd(x - Vec2(0, e))) / (2 * e);
    CHECK((phi.jac(x) - fd).norm() < 1e-8);
  }
}

TEST_CASE("pullback solution correspondence: u1 = u2 o phi") {
  std::mt19937_64 rng(5);
  CoefficientSet base = testutil::random_spec(rng, 0.15, 0.3);
  Diffeo phi = Diffeo::bump_displacement(Vec2(0.5, 0.55), 0.3, Vec2(0.6, 0.4), 0.08);
  BoundarySource src;
  src.patch = "gamma0";
  src.t1 = 1e9;
  src.f = [](double s, double t) {
    auto s4 = [](double q, double P) {
      if (q <= 0 || q >= P) return 0.0;
      double z = std::sin(M_PI * q / P);
      return z * z * z * z;
    };
    return complexd(s4(s - 0.2, 0.6) * s4(t, 0.35));
  };
  std::vector<double> errs;
  for (int n : {49, 97}) {
    Domain d = Domain::unit_square(n);
    auto s2 = OperatorSpec::from_closures(d, base);
    auto s1 = pullback_operator(s2, phi);
    WaveField u2 = solve_ibvp(s2, src, 0.45, 0.4);
    WaveField u1 = solve_ibvp(s1, src, 0.45, 0.4);
    const CGrid& A = u1.steps.back();
    const CGrid& B = u2.steps.back();
    double num = 0.0, den = 0.0;
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        Vec2 q = phi.fwd(Vec2(d.x1(i), d.x2(j)));
        complexd expect = bil(B, d, q(0), q(1));
        num = std::max(num, std::abs(A(i, j) - expect));
        den = std::max(den, std::abs(expect));
      }
    errs.push_back(num / den);
  }
  CHECK(errs[0] < 0.02);
  CHECK(errs[1] < 0.008);
  CHECK(errs[0] / errs[1] > 2.0);
}

TEST_CASE("pullback functoriality") {
  std::mt19937_64 rng(15);
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng, 0.1, 0.3));
  Diffeo p1 = Diffeo::bump_displacement(Vec2(0.45, 0.5), 0.25, Vec2(1, 0), 0.05);
  Diffeo p2 = Diffeo::bump_displacement(Vec2(0.6, 0.45), 0.3, Vec2(0, 1), -0.06);
  auto two = pullback_operator(pullback_operator(spec, p1), p2);
  auto one = pullback_operator(spec, Diffeo::compose(p1, p2));
  CHECK((two.g11 - one.g11).abs().maxCoeff() < 1e-10);
  CHECK((two.g12 - one.g12).abs().maxCoeff() < 1e-10);
  CHECK((two.g22 - one.g22).abs().maxCoeff() < 1e-10);
  CHECK((two.A1 - one.A1).abs().maxCoeff() < 1e-10);
  CHECK((two.V - one.V).abs().maxCoeff() < 1e-10);
}

TEST_CASE("orientation-reversing maps are rejected") {
  Domain d = Domain::unit_square(17);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  Diffeo bad = Diffeo::identity();
  bad.jac = [](const Vec2&) {
    Mat2 J;
    J << 1, 0, 0, -1;
    return J;
  };
  CHECK_THROWS_AS(pullback_operator(spec, bad), std::invalid_argument);
}

TEST_CASE("compose_equivalence: flags, order, boundary layer") {
  std::mt19937_64 rng(19);
  Domain d = Domain::unit_square(49);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng, 0.15, 0.3));

  // both factors vanish near the bottom edge
  Diffeo phi = Diffeo::bump_displacement(Vec2(0.5, 0.6), 0.3, Vec2(0.5, 0.3), 0.06);
  RadialBump tb{0.45, 0.6, 0.3};
  auto ge = GaugeElement::phase(
      [tb](double x, double y) { return 0.8 * tb.value(x, y); }, true);
  REQUIRE(phi.identity_on_gamma0);

  auto eq = compose_equivalence(spec, phi, ge);
  // equals the stepwise composition by definition
  auto step = gauge_transform_operator(pullback_operator(spec, phi), ge);
  CHECK((eq.A1 - step.A1).abs().maxCoeff() < 1e-12);

  // interior differs, boundary layer matches
  CHECK((eq.g22 - spec.g22).abs().maxCoeff() > 1e-3);
  for (int i = 0; i < d.nx; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(eq.g11(i, j) - spec.g11(i, j)) < 1e-10);
      CHECK(std::abs(eq.A1(i, j) - spec.A1(i, j)) < 1e-10);
      CHECK(std::abs(eq.V(i, j) - spec.V(i, j)) < 1e-10);
    }

  // unset flags are rejected
  Diffeo moving = Diffeo::bump_displacement(Vec2(0.5, 0.1), 0.3, Vec2(0, 1), 0.05);
  CHECK(!moving.identity_on_gamma0);
  CHECK_THROWS_AS(compose_equivalence(spec, moving, ge), std::invalid_argument);
  auto unflagged = GaugeElement::phase([](double, double) { return 0.0; });
  CHECK_THROWS_AS(compose_equivalence(spec, phi, unflagged),
                  std::invalid_argument);
}
