#pragma once

#include <optional>

#include "dtnlab/coefficients.hpp"
#include "dtnlab/domain.hpp"
#include "dtnlab/types.hpp"

namespace dtnlab {

// Discretized coefficients of the hyperbolic operator
//
//   L u = u_tt + sum_{j,k} (1/sqrt(g)) (-i d_j + A_j) sqrt(g) g^{jk}
//                                      (-i d_k + A_k) u + V u
//
// on a Domain grid. g^{jk} is the inverse metric; g = 1/det g^{jk} is the
// volume factor. All fields are nodal; flux coefficients are averaged to
// half nodes at application time so the spatial part is symmetric for real
// coefficients (weighted inner product with weight sqrt(g)).
class OperatorSpec {
 public:
  Domain domain;

  Grid g11, g12, g22;   // inverse metric, symmetric positive definite
  Grid sqrtg;           // sqrt(1/det g^{jk}), recomputed from the metric
  CGrid A1, A2;         // magnetic covector (real when self-adjoint)
  CGrid V;              // electric potential
  bool selfadjoint = true;

  // construction-time closures; kept for geodesics and exact regridding
  std::optional<CoefficientSet> closures;

  double lambda_min = 0.0, lambda_max = 0.0;  // metric eigenvalue range over nodes

  static OperatorSpec from_closures(const Domain& d, const CoefficientSet& c);

  // assemble directly from sampled fields (pullback operators on chart grids)
  static OperatorSpec from_grids(const Domain& d, Grid g11, Grid g12, Grid g22,
                                 CGrid A1, CGrid A2, CGrid V);

  // resample the same closures on another grid (refinement ladders)
  OperatorSpec regrid(const Domain& d) const;

  void validate() const;  // SPD metric, shapes, volume-factor consistency

  Mat2 metric_inv_at(int i, int j) const {
    Mat2 G;
    G << g11(i, j), g12(i, j), g12(i, j), g22(i, j);
    return G;
  }
};

// Spatial part of L applied to a nodal field. Values on the outermost node
// ring are not meaningful (returned as zero); callers impose boundary data
// separately. Second-order flux-form stencil, periodic in x1 when the
// domain says so.
CGrid apply_spatial_operator(const OperatorSpec& spec, const CGrid& u);

// Generic linear operator application, for probing conjugated operators.
using ApplyFn = std::function<CGrid(const CGrid&)>;

// Divergence-weight convention of the second-order part:
//   metric_volume: (1/sqrt(g)) d_j ( sqrt(g) g^{jk} d_k . )
//   unit:          d_j ( a^{jk} d_k . )
enum class WeightMode { metric_volume, unit };

// Coefficients recovered by applying an operator to probe functions
// 1, x_j, x_j x_k. Valid on the interior margin mask only.
struct ProbedCoefficients {
  Grid g11, g12, g22;
  CGrid A1, A2, V;
  BGrid valid;  // nodes far enough from the boundary for all corrections
};

ProbedCoefficients probe_operator(const ApplyFn& op, const Domain& d,
                                  WeightMode mode);

inline ProbedCoefficients probe_coefficients(const OperatorSpec& spec) {
  return probe_operator(
      [&spec](const CGrid& u) { return apply_spatial_operator(spec, u); },
      spec.domain, WeightMode::metric_volume);
}

// <u, v>_g = sum sqrt(g) u conj(v) h^2 over all nodes
complexd weighted_inner(const OperatorSpec& spec, const CGrid& u, const CGrid& v);

}  // namespace dtnlab
