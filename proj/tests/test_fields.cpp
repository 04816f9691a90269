#include <random>

#include "doctest.h"
#include "dtnlab/operator_spec.hpp"
#include "test_util.hpp"

using namespace dtnlab;

namespace {

// Dense-assembly oracle: build the full operator matrix entry by entry from
// the stencil written out longhand, independent of apply_spatial_operator.
Eigen::MatrixXcd dense_operator(const OperatorSpec& s) {
  const Domain& d = s.domain;
  const int nx = d.nx, ny = d.ny, N = nx * ny;
  const double h = d.h;
  auto id = [nx](int i, int j) { return i + nx * j; };
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);

  Grid w11 = s.sqrtg * s.g11, w22 = s.sqrtg * s.g22, w12 = s.sqrtg * s.g12;
  CGrid b1 = s.sqrtg * (s.g11 * s.A1 + s.g12 * s.A2);
  CGrid b2 = s.sqrtg * (s.g12 * s.A1 + s.g22 * s.A2);

  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      int r = id(i, j);
      double isg = 1.0 / s.sqrtg(i, j);
      double axp = 0.5 * (w11(i, j) + w11(i + 1, j));
      double axm = 0.5 * (w11(i - 1, j) + w11(i, j));
      double ayp = 0.5 * (w22(i, j) + w22(i, j + 1));
      double aym = 0.5 * (w22(i, j - 1) + w22(i, j));
      // -(1/sqrtg) * axis flux
      M(r, id(i + 1, j)) += -isg * axp / (h * h);
      M(r, id(i - 1, j)) += -isg * axm / (h * h);
      M(r, id(i, j + 1)) += -isg * ayp / (h * h);
      M(r, id(i, j - 1)) += -isg * aym / (h * h);
      M(r, r) += isg * (axp + axm + ayp + aym) / (h * h);
      // mixed terms
      double q = isg / (4 * h * h);
      M(r, id(i + 1, j + 1)) += -q * (w12(i + 1, j) + w12(i, j + 1));
      M(r, id(i - 1, j - 1)) += -q * (w12(i - 1, j) + w12(i, j - 1));
      M(r, id(i + 1, j - 1)) += q * (w12(i + 1, j) + w12(i, j - 1));
      M(r, id(i - 1, j + 1)) += q * (w12(i - 1, j) + w12(i, j + 1));
      // first order: -i/sqrtg * [D(b u) + b Du]
      complexd f = -I_UNIT * isg / (2 * h);
      M(r, id(i + 1, j)) += f * (b1(i + 1, j) + b1(i, j));
      M(r, id(i - 1, j)) += -f * (b1(i - 1, j) + b1(i, j));
      M(r, id(i, j + 1)) += f * (b2(i, j + 1) + b2(i, j));
      M(r, id(i, j - 1)) += -f * (b2(i, j - 1) + b2(i, j));
      // zero order
      M(r, r) += s.g11(i, j) * s.A1(i, j) * s.A1(i, j) +
                 2.0 * s.g12(i, j) * s.A1(i, j) * s.A2(i, j) +
                 s.g22(i, j) * s.A2(i, j) * s.A2(i, j) + s.V(i, j);
    }
  return M;
}

}  // namespace

TEST_CASE("flat Laplacian of quadratic is -4 on interior") {
  Domain d = Domain::unit_square(33);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  CGrid u(d.nx, d.ny);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      u(i, j) = d.x1(i) * d.x1(i) + d.x2(j) * d.x2(j);
  CGrid Lu = apply_spatial_operator(spec, u);
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i)
      CHECK(std::abs(Lu(i, j) - complexd(-4.0)) < 1e-10);
}

TEST_CASE("constant magnetic potential applied to 1 gives a^2") {
  Domain d = Domain::unit_square(17);
  CoefficientSet c = CoefficientSet::flat();
  const double a = 0.7;
  c.A1 = [a](double, double) { return complexd(a); };
  auto spec = OperatorSpec::from_closures(d, c);
  CGrid Lu = apply_spatial_operator(spec, CGrid::Constant(d.nx, d.ny, 1.0));
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i)
      CHECK(std::abs(Lu(i, j) - complexd(a * a)) < 1e-12);
}

TEST_CASE("apply matches dense-assembly oracle on random smooth specs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 3; ++trial) {
    Domain d = Domain::unit_square(14 + 3 * trial);
    auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng));
    CGrid u = testutil::random_complex_grid(rng, d.nx, d.ny);
    CGrid Lu = apply_spatial_operator(spec, u);
    Eigen::MatrixXcd M = dense_operator(spec);
    Eigen::VectorXcd uv(d.nx * d.ny);
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) uv(i + d.nx * j) = u(i, j);
    Eigen::VectorXcd Mv = M * uv;
    for (int j = 1; j < d.ny - 1; ++j)
      for (int i = 1; i < d.nx - 1; ++i)
        CHECK(std::abs(Lu(i, j) - Mv(i + d.nx * j)) < 1e-10);
  }
}

TEST_CASE("discrete symmetry in the weighted inner product") {
  std::mt19937_64 rng(7);
  Domain d = Domain::unit_square(24);
  CoefficientSet c = testutil::random_spec(rng);
  auto spec = OperatorSpec::from_closures(d, c);
  REQUIRE(spec.selfadjoint);
  CGrid u = testutil::random_complex_grid(rng, d.nx, d.ny, true);
  CGrid v = testutil::random_complex_grid(rng, d.nx, d.ny, true);
  complexd a = weighted_inner(spec, apply_spatial_operator(spec, u), v);
  complexd b = weighted_inner(spec, u, apply_spatial_operator(spec, v));
  CHECK(std::abs(a - b) < 1e-10 * std::abs(a));
}

TEST_CASE("volume factor consistency") {
  std::mt19937_64 rng(11);
  Domain d = Domain::unit_square(20);
  auto spec = OperatorSpec::from_closures(d, testutil::random_spec(rng));
  Grid det = spec.g11 * spec.g22 - spec.g12 * spec.g12;
  Grid err = (spec.sqrtg * spec.sqrtg * det - 1.0).abs();
  CHECK(err.maxCoeff() < 1e-12);
}

TEST_CASE("non-positive-definite metric is rejected") {
  Domain d = Domain::unit_square(16);
  CoefficientSet c = CoefficientSet::flat();
  c.g12 = [](double x, double y) { return 1.5 * (0.2 + x * y); };
  CHECK_THROWS_AS(OperatorSpec::from_closures(d, c), std::invalid_argument);
}

TEST_CASE("shape mismatch is rejected") {
  Domain d = Domain::unit_square(16);
  auto spec = OperatorSpec::from_closures(d, CoefficientSet::flat());
  CHECK_THROWS_AS(apply_spatial_operator(spec, CGrid::Zero(8, 8)),
                  std::invalid_argument);
}

TEST_CASE("probe recovers constant potential") {
  Domain d = Domain::unit_square(33);
  CoefficientSet c = CoefficientSet::flat();
  c.V = [](double, double) { return complexd(5.0); };
  auto spec = OperatorSpec::from_closures(d, c);
  auto p = probe_coefficients(spec);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (p.valid(i, j)) CHECK(std::abs(p.V(i, j) - complexd(5.0)) < 1e-9);
}

TEST_CASE("probe . assemble = identity up to O(h^2)") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 2; ++trial) {
    CoefficientSet c = testutil::random_spec(rng);
    for (int n : {33, 65}) {
      Domain d = Domain::unit_square(n);
      auto spec = OperatorSpec::from_closures(d, c);
      auto p = probe_coefficients(spec);
      double tol = 10.0 * d.h * d.h;
      double worst = 0.0;
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) {
          if (!p.valid(i, j)) continue;
          worst = std::max(worst, std::abs(p.g11(i, j) - spec.g11(i, j)));
          worst = std::max(worst, std::abs(p.g12(i, j) - spec.g12(i, j)));
          worst = std::max(worst, std::abs(p.g22(i, j) - spec.g22(i, j)));
          worst = std::max(worst, std::abs(p.A1(i, j) - spec.A1(i, j)));
          worst = std::max(worst, std::abs(p.A2(i, j) - spec.A2(i, j)));
          worst = std::max(worst, std::abs(p.V(i, j) - spec.V(i, j)));
        }
      CHECK(worst < tol);
    }
  }
}
