#pragma once

#include <optional>
#include <vector>

#include "dtnlab/operator_spec.hpp"

namespace dtnlab {

// One sample along a bicharacteristic: position, momentum, the raw Jacobi
// matrix J = [dx/dy' | dx/dt] and its determinant normalized so detJ(0) = 1.
struct RayState {
  double t = 0.0;
  Vec2 x, p;
  Mat2 J;
  double detJ = 1.0;
};

struct GeodesicRay {
  double yprime = 0.0;  // launch coordinate along the boundary
  std::vector<RayState> states;
  double dt = 0.0;      // actual sample spacing (may be halved from request)
  double h_drift = 0.0; // max |H - 1| over samples
  bool exited = false;  // truncated: left the coefficient-definition region

  const RayState& back() const { return states.back(); }
  int n_samples() const { return static_cast<int>(states.size()); }
};

// Initial state and its derivative with respect to the boundary parameter.
struct RayLaunch {
  Vec2 x, p;    // launch point and covector (unit: H(x,p) = 1)
  Vec2 dx, dp;  // d/dy' of launch point and covector
};

struct Rect {
  double x1a = 0.0, x1b = 1.0, x2a = 0.0, x2b = 1.0;
  bool contains(const Vec2& x) const {
    return x(0) >= x1a && x(0) <= x1b && x(1) >= x2a && x(1) <= x2b;
  }
};

// RK4 integration of dx/dt = dH/dp, dp/dt = -dH/dx with H = sqrt(g^{jk}p_jp_k),
// together with the variational system for the Jacobi column dx/dy'. Halves
// the step (up to three times) if |H - 1| drifts past tol_H, then throws.
GeodesicRay flow_ray(const CoefficientSet& c, const RayLaunch& launch,
                     double t_max, double dt, const Rect& bounds,
                     double tol_H = 1e-6);

// Ray from (y', 0) on the bottom edge with p'(0) = 0, p_n(0) = 1/sqrt(g^{nn}).
GeodesicRay flow_geodesic(const OperatorSpec& spec, double yprime, double t_max,
                          double dt);

// Parameters where detJ vanishes: sign changes located by linear
// interpolation (dt accuracy), sub-threshold local minima as fallback.
// eps_focal <= 0 selects the default 1e-6 * max|detJ|.
std::vector<double> detect_focal(const GeodesicRay& ray, double eps_focal = 0.0);

struct DistanceOptions {
  bool graph_only = false;  // skip the fast-sweeping refinement pass
};

// Distance to the source node set in the metric inverse to g^{jk}: Dijkstra
// on the 8-neighbor graph with metric edge weights, then one fast-sweeping
// pass of triangle updates. First-order accurate.
Grid geodesic_distance(const OperatorSpec& spec, const BGrid& source,
                       const DistanceOptions& opts = {});

BGrid patch_mask(const Domain& d, const std::string& patch);

// Forward-influence sets of a boundary set Gamma over horizon T. The
// space-time set D(Gamma x (0,T)) is {(x,t): d(x,Gamma) <= t}; its time
// slices come from d_mask. y_n is the normal coordinate used by the
// X20 / Delta parts.
struct InfluenceSets {
  double T = 0.0;
  Grid dist_gamma;  // d(x, Gamma)
  Grid dist_gcal;   // d(x, G)
  Grid y_n;
  BGrid gcal;   // G: boundary nodes reachable by time T
  BGrid delta;  // Delta: projection of X20 to t = 0

  BGrid d_mask(double t) const { return dist_gamma <= t; }
  bool in_x20(int i, int j, double t) const {
    return T > 0.0 && dist_gcal(i, j) <= t && t <= T - y_n(i, j);
  }
};

// y_n defaults to the geodesic distance to the bottom edge (the
// boundary-adapted normal coordinate for bottom-edge control sets). dopts
// selects the distance backend (graph_only for exact graph oracles).
InfluenceSets influence_sets(const OperatorSpec& spec, const std::string& gamma,
                             double T, const std::optional<Grid>& y_n = {},
                             const DistanceOptions& dopts = {});

}  // namespace dtnlab
