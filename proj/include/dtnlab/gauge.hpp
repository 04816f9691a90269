#pragma once

#include <optional>

#include "dtnlab/wave.hpp"

namespace dtnlab {

// Element of the gauge group: smooth nowhere-zero c(x); when fixed_on_gamma0
// is set, c = 1 on the closure of the control patch.
struct GaugeElement {
  ComplexFn c;
  // set for unimodular elements c = e^{i theta}; lets the operator transform
  // stay exactly real for real theta
  std::optional<ScalarFn> theta;
  bool fixed_on_gamma0 = false;

  static GaugeElement identity();
  // c = e^{i theta}; unimodular, preserves self-adjointness
  static GaugeElement phase(ScalarFn theta, bool fixed_on_gamma0 = false);
};

// Analytic diffeomorphism with analytic inverse and Jacobian.
struct Diffeo {
  std::function<Vec2(const Vec2&)> fwd, inv;
  std::function<Mat2(const Vec2&)> jac;  // D phi / D x
  bool identity_on_gamma0 = false;

  static Diffeo identity();
  // x + beta * eta(|x-center|^2/w^2) * e; Newton inverse. Fixes gamma0 when
  // the bump support stays off the bottom edge.
  static Diffeo bump_displacement(const Vec2& center, double w, const Vec2& e,
                                  double beta);
  // same displacement with the cos^4 window profile (tamer derivatives)
  static Diffeo window_displacement(const Vec2& center, double w, const Vec2& e,
                                    double beta);
  static Diffeo rotation(const Vec2& center, double angle);
  static Diffeo compose(const Diffeo& f, const Diffeo& g);  // f after g
};

// A_j -> A_j - i c^{-1} d_j c; metric and V unchanged.
OperatorSpec gauge_transform_operator(const OperatorSpec& spec,
                                      const GaugeElement& c);

// u -> c^{-1} u on the grid.
CGrid gauge_transform_solution(const CGrid& u, const Domain& d,
                               const GaugeElement& c);
WaveField gauge_transform_solution(const WaveField& u, const Domain& d,
                                   const GaugeElement& c);

// Operator in the new coordinates: solutions correspond by composition,
// u_new = u_old o phi.
OperatorSpec pullback_operator(const OperatorSpec& spec, const Diffeo& phi);

// c o phi o spec (manufactured equivalence); both must fix
// the control patch.
OperatorSpec compose_equivalence(const OperatorSpec& spec, const Diffeo& phi,
                                 const GaugeElement& c);

}  // namespace dtnlab
