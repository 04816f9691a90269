#pragma once

#include <functional>
#include <optional>
#include <string>

#include "dtnlab/geodesics.hpp"
#include "dtnlab/wave.hpp"

namespace dtnlab {

// Raised when a caustic sits inside the requested slab.
class FocalPointError : public std::runtime_error {
 public:
  FocalPointError(double yprime, double yn);
  double yprime, yn;
};

// Semigeodesic coordinates y = (y', y_n) over a boundary piece: forward map
// x(y) tabulated from the ray fan on a square (dy x dy) grid, inverse by
// Newton iteration on the bilinear interpolant, induced inverse metric
// ghat^{jk}(y) from the tensor transformation with the ray Jacobian.
struct SemigeodesicChart {
  double y0 = 0.0, y1 = 0.0;  // y' range (arclength along the boundary piece)
  double dy = 0.0;            // grid spacing in y' and y_n
  int ns = 0, nn = 0;         // samples along y' and y_n

  Grid x1t, x2t;           // tabulated forward map
  Grid det;                // det(Dx/Dy)
  std::vector<Mat2> Jt;    // Dx/Dy per node, index is + ns*in
  BGrid mask;              // ray sample exists, inside bounds, not near-focal
  Grid g11h, g12h, g22h;   // induced inverse metric ghat^{jk}(y)
  Grid ghat;               // volume factor det ghat_{jk}

  const Mat2& J_at(int is, int in) const { return Jt[is + ns * in]; }
  double t_half() const { return (nn - 1) * dy; }

  bool in_range(double yp, double yn) const {
    return yp >= y0 - 1e-12 && yp <= y1 + 1e-12 && yn >= -1e-12 &&
           yn <= t_half() + 1e-12;
  }

  Vec2 forward(double yp, double yn) const;  // bilinear on the tables
  Mat2 jacobian(double yp, double yn) const;
  // Newton inversion; nullopt when off the chart or non-convergent
  std::optional<Vec2> inverse(const Vec2& x) const;
};

// Launch data for the fan: arclength parameter s -> initial ray state.
using LaunchCurve = std::function<RayLaunch(double s)>;

// Fan over an arbitrary arclength-parametrized boundary curve.
SemigeodesicChart build_chart_fan(const CoefficientSet& c,
                                  const LaunchCurve& curve, double s0,
                                  double s1, double T_half, double dy,
                                  const Rect& bounds);

// Standard chart over a bottom-edge patch of the spec's domain.
SemigeodesicChart build_chart(const OperatorSpec& spec,
                              const std::string& patch, double T_half,
                              double dy);

// Inward launch from the circle of radius R about center, s = R * theta.
RayLaunch circle_launch(const Vec2& center, double R, double s);

// Gauge normalization killing the normal magnetic component:
// psi(y', y_n) = -int_0^{y_n} A_n(y', s) ds, multiplier m = ghat^{1/4} e^{-i psi}.
struct GaugeNormalization {
  Grid psi;
  Grid An1, At1;  // normalized field: A + grad psi (normal, tangential)
  CGrid m;
};

GaugeNormalization gauge_normalize(const SemigeodesicChart& chart,
                                   const Grid& An, const Grid& At);

// Components of the pulled-back magnetic covector on the chart grid
// (tangential = d/dy', normal = d/dy_n), from the spec's closures.
void pullback_covector(const SemigeodesicChart& chart, const OperatorSpec& spec,
                       Grid& At, Grid& An);

// Half-density/gauge normal form: u -> m * Lhat(m^{-1} u) with Lhat the
// pullback of the spec through the chart. Coefficients are recovered by
// probing in unit weight mode, never written in closed form.
struct NormalFormOperator {
  OperatorSpec Lhat;  // pullback operator on the chart grid
  CGrid m;

  CGrid apply(const CGrid& u) const;
  ProbedCoefficients probe() const;
};

NormalFormOperator to_normal_form(const OperatorSpec& spec,
                                  const SemigeodesicChart& chart,
                                  const GaugeNormalization& gnorm);

// u^{(1)}(y,t) = m(y) * u(x(y), t), bilinear in x; zero off the mask.
WaveField transform_solution(const WaveField& u, const Domain& xdom,
                             const SemigeodesicChart& chart,
                             const GaugeNormalization& gnorm);

}  // namespace dtnlab
