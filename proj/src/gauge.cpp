#include "dtnlab/gauge.hpp"

#include <cmath>
#include <stdexcept>

namespace dtnlab {

GaugeElement GaugeElement::identity() {
  GaugeElement g;
  g.c = [](double, double) { return complexd(1.0); };
  g.fixed_on_gamma0 = true;
  return g;
}

GaugeElement GaugeElement::phase(ScalarFn theta, bool fixed_on_gamma0) {
  GaugeElement g;
  g.c = [theta](double x, double y) {
    return std::exp(I_UNIT * theta(x, y));
  };
  g.theta = theta;
  g.fixed_on_gamma0 = fixed_on_gamma0;
  return g;
}

Diffeo Diffeo::identity() {
  Diffeo d;
  d.fwd = [](const Vec2& x) { return x; };
  d.inv = [](const Vec2& x) { return x; };
  d.jac = [](const Vec2&) { return Mat2::Identity(); };
  d.identity_on_gamma0 = true;
  return d;
}

namespace {

template <typename Bump>
Diffeo profile_displacement(const Bump& b, const Vec2& center, double w,
                            const Vec2& e, double beta) {
  auto fwd = [b, e, beta](const Vec2& x) -> Vec2 {
    return x + beta * b.value(x(0), x(1)) * e;
  };
  auto jac = [b, e, beta](const Vec2& x) -> Mat2 {
    Vec2 g = b.gradient(x(0), x(1));
    return Mat2::Identity() + beta * e * g.transpose();
  };
  Diffeo d;
  d.fwd = fwd;
  d.jac = jac;
  d.inv = [fwd, jac](const Vec2& y) -> Vec2 {
    Vec2 x = y;
    for (int it = 0; it < 50; ++it) {
      Vec2 F = fwd(x) - y;
      if (F.norm() < 1e-13) return x;
      x -= jac(x).inverse() * F;
    }
    throw std::runtime_error("gauge: diffeo inverse failed to converge");
  };
  d.identity_on_gamma0 = center(1) - w > 0.0;
  return d;
}

}  // namespace

Diffeo Diffeo::bump_displacement(const Vec2& center, double w, const Vec2& e,
                                 double beta) {
  return profile_displacement(RadialBump{center(0), center(1), w}, center, w, e,
                              beta);
}

Diffeo Diffeo::window_displacement(const Vec2& center, double w, const Vec2& e,
                                   double beta) {
  return profile_displacement(WindowBump{center(0), center(1), w}, center, w, e,
                              beta);
}

Diffeo Diffeo::rotation(const Vec2& center, double angle) {
  Mat2 R;
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Diffeo d;
  d.fwd = [center, R](const Vec2& x) -> Vec2 { return center + R * (x - center); };
  Mat2 Rt = R.transpose();
  d.inv = [center, Rt](const Vec2& x) -> Vec2 { return center + Rt * (x - center); };
  d.jac = [R](const Vec2&) { return R; };
  d.identity_on_gamma0 = angle == 0.0;
  return d;
}

Diffeo Diffeo::compose(const Diffeo& f, const Diffeo& g) {
  Diffeo d;
  d.fwd = [f, g](const Vec2& x) { return f.fwd(g.fwd(x)); };
  d.inv = [f, g](const Vec2& y) { return g.inv(f.inv(y)); };
  d.jac = [f, g](const Vec2& x) -> Mat2 { return f.jac(g.fwd(x)) * g.jac(x); };
  d.identity_on_gamma0 = f.identity_on_gamma0 && g.identity_on_gamma0;
  return d;
}

OperatorSpec gauge_transform_operator(const OperatorSpec& spec,
                                      const GaugeElement& g) {
  if (!spec.closures)
    throw std::invalid_argument("gauge: spec has no coefficient closures");
  const Domain& d = spec.domain;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (std::abs(g.c(d.x1(i), d.x2(j))) < 1e-8)
        throw std::invalid_argument("gauge: c vanishes on the grid");

  CoefficientSet c = *spec.closures;
  if (g.theta) {  // A' = A + grad theta, exactly real for real theta
    ScalarFn th = *g.theta;
    auto shifted = [th](const ComplexFn& A, int axis) -> ComplexFn {
      return [th, A, axis](double x, double y) {
        return A(x, y) + fd_partial(th, x, y, axis);
      };
    };
    c.A1 = shifted(c.A1, 0);
    c.A2 = shifted(c.A2, 1);
  } else {
    ComplexFn cc = g.c;
    auto shifted = [cc](const ComplexFn& A, int axis) -> ComplexFn {
      return [cc, A, axis](double x, double y) {
        return A(x, y) - I_UNIT * fd_partial(cc, x, y, axis) / cc(x, y);
      };
    };
    c.A1 = shifted(c.A1, 0);
    c.A2 = shifted(c.A2, 1);
  }
  return OperatorSpec::from_closures(d, c);
}

CGrid gauge_transform_solution(const CGrid& u, const Domain& d,
                               const GaugeElement& g) {
  if (u.rows() != d.nx || u.cols() != d.ny)
    throw std::invalid_argument("gauge: field shape mismatch");
  CGrid out(d.nx, d.ny);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      out(i, j) = u(i, j) / g.c(d.x1(i), d.x2(j));
  return out;
}

WaveField gauge_transform_solution(const WaveField& u, const Domain& d,
                                   const GaugeElement& g) {
  WaveField out;
  out.dt = u.dt;
  out.steps.reserve(u.steps.size());
  for (const auto& lev : u.steps)
    out.steps.push_back(gauge_transform_solution(lev, d, g));
  return out;
}

OperatorSpec pullback_operator(const OperatorSpec& spec, const Diffeo& phi) {
  if (!spec.closures)
    throw std::invalid_argument("gauge: spec has no coefficient closures");
  const Domain& d = spec.domain;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (phi.jac(Vec2(d.x1(i), d.x2(j))).determinant() <= 0.0)
        throw std::invalid_argument("gauge: diffeo Jacobian not orientation-preserving");

  const CoefficientSet old = *spec.closures;
  auto fwd = phi.fwd;
  auto jac = phi.jac;

  // inverse metric as a (2,0)-tensor: G_new = J^{-1} (G_old o phi) J^{-T},
  // so u_new = u_old o phi solves the pulled-back equation
  auto gmat = [old, fwd, jac](double x, double y) -> Mat2 {
    Vec2 p(x, y);
    Mat2 K = jac(p).inverse();
    Vec2 q = fwd(p);
    return K * old.metric_inv(q(0), q(1)) * K.transpose();
  };
  CoefficientSet c;
  c.g11 = [gmat](double x, double y) { return gmat(x, y)(0, 0); };
  c.g12 = [gmat](double x, double y) {
    Mat2 G = gmat(x, y);
    return 0.5 * (G(0, 1) + G(1, 0));
  };
  c.g22 = [gmat](double x, double y) { return gmat(x, y)(1, 1); };
  auto avec = [old, fwd, jac](double x, double y) -> CVec2 {
    Vec2 p(x, y);
    Vec2 q = fwd(p);
    CVec2 A(old.A1(q(0), q(1)), old.A2(q(0), q(1)));
    return jac(p).transpose().cast<complexd>() * A;  // covector pullback
  };
  c.A1 = [avec](double x, double y) { return avec(x, y)(0); };
  c.A2 = [avec](double x, double y) { return avec(x, y)(1); };
  c.V = [old, fwd](double x, double y) {
    Vec2 q = fwd(Vec2(x, y));
    return old.V(q(0), q(1));
  };
  return OperatorSpec::from_closures(d, c);
}

OperatorSpec compose_equivalence(const OperatorSpec& spec, const Diffeo& phi,
                                 const GaugeElement& c) {
  if (!phi.identity_on_gamma0 || !c.fixed_on_gamma0)
    throw std::invalid_argument(
        "gauge: equivalence requires both factors to fix the control patch");
  return gauge_transform_operator(pullback_operator(spec, phi), c);
}

}  // namespace dtnlab
