#pragma once

#include <cmath>
#include <stdexcept>

#include "dtnlab/types.hpp"

namespace dtnlab {

// Analytic coefficient closures for one operator: the inverse metric g^{jk},
// the magnetic covector A and the electric potential V. Closures are the
// construction-time description; grids sampled from them are the source of
// truth for the discrete operator.
struct CoefficientSet {
  ScalarFn g11, g12, g22;  // symmetric inverse metric
  ComplexFn A1, A2, V;

  Mat2 metric_inv(double x, double y) const {
    Mat2 G;
    G << g11(x, y), g12(x, y), g12(x, y), g22(x, y);
    return G;
  }

  static CoefficientSet flat() {
    CoefficientSet c;
    c.g11 = [](double, double) { return 1.0; };
    c.g12 = [](double, double) { return 0.0; };
    c.g22 = [](double, double) { return 1.0; };
    c.A1 = c.A2 = c.V = [](double, double) { return complexd(0.0); };
    return c;
  }
};

// C-infinity bump: eta(q) = exp(q/(q-1)) for q in [0,1), 0 for q >= 1,
// eta(0) = 1. Used for compactly supported coefficient and displacement
// profiles.
inline double bump_eta(double q) {
  if (q >= 1.0) return 0.0;
  if (q <= 0.0) return 1.0;
  return std::exp(q / (q - 1.0));
}

inline double bump_eta_prime(double q) {
  if (q >= 1.0 || q <= 0.0) return 0.0;
  double d = q - 1.0;
  return std::exp(q / d) * (-1.0 / (d * d));
}

// C^3 compactly supported window: cos^4(pi q / 2) on [0,1), 0 beyond. Much
// tamer derivatives than bump_eta; preferred where the profile has to be
// resolved on desk grids.
inline double window4(double q) {
  if (q >= 1.0) return 0.0;
  if (q <= 0.0) return 1.0;
  double c = std::cos(0.5 * M_PI * q);
  return c * c * c * c;
}

inline double window4_prime(double q) {
  if (q >= 1.0 || q <= 0.0) return 0.0;
  double c = std::cos(0.5 * M_PI * q);
  return -2.0 * M_PI * c * c * c * std::sin(0.5 * M_PI * q);
}

// Radial cos^4 window centered at (cx, cy) with radius w.
struct WindowBump {
  double cx = 0.5, cy = 0.5, w = 0.25;

  double value(double x, double y) const {
    double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w);
    return window4(q);
  }
  Vec2 gradient(double x, double y) const {
    double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w);
    double dq = window4_prime(q) * 2.0 / (w * w);
    return Vec2(dq * (x - cx), dq * (y - cy));
  }
};

// Radial bump centered at (cx, cy) with radius w: b(x) = eta(r^2/w^2).
struct RadialBump {
  double cx = 0.5, cy = 0.5, w = 0.25;

  double value(double x, double y) const {
    double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w);
    return bump_eta(q);
  }
  Vec2 gradient(double x, double y) const {
    double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w);
    double dq = bump_eta_prime(q) * 2.0 / (w * w);
    return Vec2(dq * (x - cx), dq * (y - cy));
  }
};

// Conformal metric g^{jk} = c(x)^2 delta_{jk} with speed
// c(x) = 1 + sum_k amp_k * bump_k(x).
inline CoefficientSet conformal_metric(std::vector<std::pair<double, RadialBump>> bumps) {
  auto speed = [bumps](double x, double y) {
    double c = 1.0;
    for (const auto& [amp, b] : bumps) c += amp * b.value(x, y);
    return c;
  };
  CoefficientSet c = CoefficientSet::flat();
  c.g11 = c.g22 = [speed](double x, double y) {
    double s = speed(x, y);
    return s * s;
  };
  return c;
}

// 4th-order central finite differences of analytic closures; used where the
// geodesic integrator needs derivatives of H.
inline double fd_partial(const ScalarFn& f, double x, double y, int axis,
                         double step = 1e-4) {
  double hx = axis == 0 ? step : 0.0;
  double hy = axis == 1 ? step : 0.0;
  return (-f(x + 2 * hx, y + 2 * hy) + 8 * f(x + hx, y + hy) -
          8 * f(x - hx, y - hy) + f(x - 2 * hx, y - 2 * hy)) /
         (12 * step);
}

inline complexd fd_partial(const ComplexFn& f, double x, double y, int axis,
                           double step = 1e-4) {
  double hx = axis == 0 ? step : 0.0;
  double hy = axis == 1 ? step : 0.0;
  return (-f(x + 2 * hx, y + 2 * hy) + 8.0 * f(x + hx, y + hy) -
          8.0 * f(x - hx, y - hy) + f(x - 2 * hx, y - 2 * hy)) /
         (12.0 * step);
}

}  // namespace dtnlab
